"""Optimizers sharing one step interface over a generic objective.

The centerpiece is the negative-learning-rate rule: take a tentative descent
step, and if the cost went up, move *along* the gradient instead (scaled by
eta_prime) rather than accepting or merely rejecting the move. Ascent on a
failed descent is what lets the iterate diffuse off flat regions instead of
stalling on them.

Baselines: plain SGD, momentum, RMSProp, Adam, descent-only Armijo
backtracking, random-kick perturbation variants, and a re-initialization
policy. Every optimizer exposes step(objective, theta) -> (new_theta,
StepEvent) so training loops and landscape experiments can swap them freely.

An Objective supplies evaluate(theta) -> float, gradient(theta) -> array, and
a dimension attribute. Step methods never mutate theta in place.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np


class Objective(Protocol):
    dimension: int

    def evaluate(self, theta: np.ndarray) -> float: ...

    def gradient(self, theta: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class NlrConfig:
    """Rates for the negative-learning step rule.

    noise_rate_nu and circuit_depth_L attenuate the reversal rate on noisy
    targets via effective_eta_prime; with nu == 0 they are inert.
    """

    eta: float
    eta_prime: float
    noise_rate_nu: float = 0.0
    circuit_depth_L: int = 1

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.eta_prime > 0:
            raise ValueError(f"eta_prime must be positive, got {self.eta_prime}")
        if self.noise_rate_nu < 0:
            raise ValueError(f"noise_rate_nu must be >= 0, got {self.noise_rate_nu}")
        if self.circuit_depth_L < 1:
            raise ValueError(f"circuit_depth_L must be >= 1, got {self.circuit_depth_L}")


@dataclass(frozen=True)
class StepEvent:
    """What one optimizer step did.

    kind is "descent_accepted" or "reversal"; reversal marks any exploration
    branch (failed tentative descent, re-initialization). loss_tentative
    records the rejected trial loss when an accept test ran, None otherwise.
    """

    kind: str
    loss_before: float
    loss_after: float
    grad_norm: float
    loss_tentative: float | None = None


@dataclass
class TrainTrace:
    events: list[StepEvent]
    losses: np.ndarray
    grad_norms: np.ndarray
    final_parameters: np.ndarray
    reversal_count: int
    full_losses: list[tuple[int, float]] = field(default_factory=list)


def guideline_eta_prime(eta: float, nu: float, depth_L: int, sigma_H_sq: float) -> float:
    """Recommended reversal rate: eta * (1 + ln(1 + nu*L)) * sqrt(sigma_H^2 / L)."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    if depth_L < 1:
        raise ValueError(f"depth_L must be >= 1, got {depth_L}")
    if not sigma_H_sq > 0:
        raise ValueError(f"sigma_H_sq must be positive, got {sigma_H_sq}")
    return eta * (1.0 + np.log1p(nu * depth_L)) * np.sqrt(sigma_H_sq / depth_L)


def in_recommended_band(eta: float, eta_prime: float) -> bool:
    """Whether eta_prime/eta sits in the recommended [1.5, 3.0] ratio band."""
    return 1.5 * eta <= eta_prime <= 3.0 * eta


def effective_eta_prime(eta_prime: float, nu: float, depth_L: int) -> float:
    """Reversal rate attenuated by target noise: eta_prime / (1 + nu*L)."""
    if not eta_prime > 0:
        raise ValueError(f"eta_prime must be positive, got {eta_prime}")
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    return eta_prime / (1.0 + nu * depth_L)


def _check_finite(name: str, value: np.ndarray) -> None:
    if not np.all(np.isfinite(value)):
        raise FloatingPointError(f"{name} contains non-finite values")


def nlr_step(
    objective: Objective,
    theta: np.ndarray,
    cfg: NlrConfig,
    rng: np.random.Generator | None = None,
    rate_scale: float = 1.0,
) -> tuple[np.ndarray, StepEvent]:
    """One negative-learning-rate step.

    Tentative theta' = theta - eta*g; if the cost rose, return
    theta + eta_prime_eff*g (kind="reversal"), otherwise theta'
    (kind="descent_accepted"). Ties accept. Both evaluations use the same
    objective, i.e. the same mini-batch that produced g. rng is accepted for
    step-interface uniformity; the rule itself is deterministic.
    """
    _check_finite("theta", theta)
    g = np.asarray(objective.gradient(theta), dtype=np.float64)
    _check_finite("gradient", g)
    eta = cfg.eta * rate_scale
    loss_before = float(objective.evaluate(theta))
    tentative = theta - eta * g
    loss_tentative = float(objective.evaluate(tentative))
    gnorm = float(np.linalg.norm(g))
    if loss_tentative > loss_before:
        up = effective_eta_prime(cfg.eta_prime, cfg.noise_rate_nu, cfg.circuit_depth_L)
        new_theta = theta + (up * rate_scale) * g
        loss_after = float(objective.evaluate(new_theta))
        event = StepEvent("reversal", loss_before, loss_after, gnorm, loss_tentative)
    else:
        new_theta = tentative
        event = StepEvent("descent_accepted", loss_before, loss_tentative, gnorm, loss_tentative)
    return new_theta, event


class Nlr:
    """Negative-learning-rate optimizer.

    schedule "constant" keeps both rates fixed; "inverse_t" scales them by
    1/(1+t) so the iterate can settle onto a shrinking noise floor.
    """

    def __init__(self, cfg: NlrConfig, schedule: str = "constant"):
        if schedule not in ("constant", "inverse_t"):
            raise ValueError(f"unknown schedule {schedule!r}")
        self.cfg = cfg
        self.schedule = schedule
        self._t = 0

    def reset(self) -> None:
        self._t = 0

    def step(self, objective: Objective, theta: np.ndarray) -> tuple[np.ndarray, StepEvent]:
        scale = 1.0 if self.schedule == "constant" else 1.0 / (1.0 + self._t)
        self._t += 1
        return nlr_step(objective, theta, self.cfg, rate_scale=scale)


def _descent_event(
    objective: Objective, theta: np.ndarray, new_theta: np.ndarray, g: np.ndarray
) -> tuple[np.ndarray, StepEvent]:
    _check_finite("updated theta", new_theta)
    event = StepEvent(
        "descent_accepted",
        float(objective.evaluate(theta)),
        float(objective.evaluate(new_theta)),
        float(np.linalg.norm(g)),
    )
    return new_theta, event


def sgd_step(
    objective: Objective, theta: np.ndarray, eta: float
) -> tuple[np.ndarray, StepEvent]:
    g = np.asarray(objective.gradient(theta), dtype=np.float64)
    _check_finite("gradient", g)
    return _descent_event(objective, theta, theta - eta * g, g)


class Sgd:
    def __init__(self, eta: float):
        self.eta = eta

    def reset(self) -> None:
        pass

    def step(self, objective: Objective, theta: np.ndarray) -> tuple[np.ndarray, StepEvent]:
        return sgd_step(objective, theta, self.eta)


class Momentum:
    """Heavy-ball SGD: v <- beta*v + g, theta <- theta - eta*v."""

    def __init__(self, eta: float, beta: float = 0.9):
        self.eta = eta
        self.beta = beta
        self._velocity: np.ndarray | None = None

    def reset(self) -> None:
        self._velocity = None

    def step(self, objective: Objective, theta: np.ndarray) -> tuple[np.ndarray, StepEvent]:
        g = np.asarray(objective.gradient(theta), dtype=np.float64)
        _check_finite("gradient", g)
        if self._velocity is None:
            self._velocity = np.zeros_like(g)
        self._velocity = self.beta * self._velocity + g
        return _descent_event(objective, theta, theta - self.eta * self._velocity, g)


class RmsProp:
    """Squared-gradient EMA scaling: s <- decay*s + (1-decay)*g^2."""

    def __init__(self, eta: float, decay: float = 0.9, eps: float = 1e-8):
        self.eta = eta
        self.decay = decay
        self.eps = eps
        self._sq_avg: np.ndarray | None = None

    def reset(self) -> None:
        self._sq_avg = None

    def step(self, objective: Objective, theta: np.ndarray) -> tuple[np.ndarray, StepEvent]:
        g = np.asarray(objective.gradient(theta), dtype=np.float64)
        _check_finite("gradient", g)
        if self._sq_avg is None:
            self._sq_avg = np.zeros_like(g)
        self._sq_avg = self.decay * self._sq_avg + (1.0 - self.decay) * g * g
        new_theta = theta - self.eta * g / (np.sqrt(self._sq_avg) + self.eps)
        return _descent_event(objective, theta, new_theta, g)


class Adam:
    """Bias-corrected first/second moment estimates, canonical constants."""

    def __init__(
        self, eta: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
    ):
        self.eta = eta
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: np.ndarray | None = None
        self._v: np.ndarray | None = None
        self._t = 0

    def reset(self) -> None:
        self._m = None
        self._v = None
        self._t = 0

    def step(self, objective: Objective, theta: np.ndarray) -> tuple[np.ndarray, StepEvent]:
        g = np.asarray(objective.gradient(theta), dtype=np.float64)
        _check_finite("gradient", g)
        if self._m is None:
            self._m = np.zeros_like(g)
            self._v = np.zeros_like(g)
        self._t += 1
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * g
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * g * g
        m_hat = self._m / (1.0 - self.beta1**self._t)
        v_hat = self._v / (1.0 - self.beta2**self._t)
        new_theta = theta - self.eta * m_hat / (np.sqrt(v_hat) + self.eps)
        return _descent_event(objective, theta, new_theta, g)


def armijo_backtrack_step(
    objective: Objective,
    theta: np.ndarray,
    eta_init: float,
    c: float = 1e-4,
    shrink: float = 0.5,
    max_shrinks: int = 30,
) -> tuple[np.ndarray, float]:
    """Descent-only backtracking line search.

    Shrinks the trial step from eta_init until
    C(theta - s*g) <= C(theta) - c*s*||g||^2; after max_shrinks failures the
    step is zero (theta is returned unchanged). Returns (new_theta,
    accepted step size).
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must be in (0, 1), got {c}")
    if not 0.0 < shrink < 1.0:
        raise ValueError(f"shrink must be in (0, 1), got {shrink}")
    g = np.asarray(objective.gradient(theta), dtype=np.float64)
    _check_finite("gradient", g)
    loss_before = float(objective.evaluate(theta))
    sq_norm = float(g @ g)
    step_size = eta_init
    for _ in range(max_shrinks + 1):
        trial = theta - step_size * g
        if float(objective.evaluate(trial)) <= loss_before - c * step_size * sq_norm:
            return trial, step_size
        step_size *= shrink
    return theta.copy(), 0.0


class ArmijoBacktracking:
    """Backtracking baseline; never moves uphill by construction.

    A step whose full-rate trial increased the cost is tagged kind="reversal"
    (the same violation event the negative-learning rule reacts to) even
    though the returned move is the shrunken descent step, so exploration-rate
    comparisons count like events for like.
    """

    def __init__(
        self, eta: float, c: float = 1e-4, shrink: float = 0.5, max_shrinks: int = 30
    ):
        self.eta = eta
        self.c = c
        self.shrink = shrink
        self.max_shrinks = max_shrinks

    def reset(self) -> None:
        pass

    def step(self, objective: Objective, theta: np.ndarray) -> tuple[np.ndarray, StepEvent]:
        g = np.asarray(objective.gradient(theta), dtype=np.float64)
        _check_finite("gradient", g)
        loss_before = float(objective.evaluate(theta))
        loss_full_trial = float(objective.evaluate(theta - self.eta * g))
        new_theta, _ = armijo_backtrack_step(
            objective, theta, self.eta, self.c, self.shrink, self.max_shrinks
        )
        loss_after = float(objective.evaluate(new_theta))
        if loss_full_trial > loss_before:
            event = StepEvent(
                "reversal", loss_before, loss_after, float(np.linalg.norm(g)), loss_full_trial
            )
        else:
            event = StepEvent(
                "descent_accepted", loss_before, loss_after, float(np.linalg.norm(g))
            )
        return new_theta, event


def perturbation_step(
    objective: Objective,
    theta: np.ndarray,
    eta: float,
    noise: str,
    sigma: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, StepEvent]:
    """Tentative descent; on violation, add a random kick instead.

    noise "gaussian" draws N(0, sigma^2 I); "uniform" draws
    U[-sigma*sqrt(3), sigma*sqrt(3)] per component, which has the same
    variance.
    """
    if noise not in ("gaussian", "uniform"):
        raise ValueError(f"unknown noise kind {noise!r}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    g = np.asarray(objective.gradient(theta), dtype=np.float64)
    _check_finite("gradient", g)
    loss_before = float(objective.evaluate(theta))
    tentative = theta - eta * g
    loss_tentative = float(objective.evaluate(tentative))
    gnorm = float(np.linalg.norm(g))
    if loss_tentative > loss_before:
        if noise == "gaussian":
            kick = rng.normal(0.0, sigma, size=theta.shape)
        else:
            half_width = sigma * np.sqrt(3.0)
            kick = rng.uniform(-half_width, half_width, size=theta.shape)
        new_theta = theta + kick
        loss_after = float(objective.evaluate(new_theta))
        event = StepEvent("reversal", loss_before, loss_after, gnorm, loss_tentative)
    else:
        new_theta = tentative
        event = StepEvent("descent_accepted", loss_before, loss_tentative, gnorm, loss_tentative)
    return new_theta, event


class PerturbedDescent:
    """Perturbation ablation with kick size variance-matched to eta_prime.

    sigma = eta_prime * mean||g|| / sqrt(dim), with mean||g|| a running
    average over the first warmup_steps gradients, frozen afterwards, so
    E||kick||^2 matches the squared reversal displacement (eta_prime *
    mean||g||)^2.
    """

    def __init__(
        self,
        eta: float,
        eta_prime: float,
        noise: str,
        rng: np.random.Generator,
        warmup_steps: int = 100,
    ):
        if noise not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise kind {noise!r}")
        self.eta = eta
        self.eta_prime = eta_prime
        self.noise = noise
        self.rng = rng
        self.warmup_steps = warmup_steps
        self._seen = 0
        self._mean_grad_norm = 0.0

    def reset(self) -> None:
        self._seen = 0
        self._mean_grad_norm = 0.0

    def step(self, objective: Objective, theta: np.ndarray) -> tuple[np.ndarray, StepEvent]:
        g = np.asarray(objective.gradient(theta), dtype=np.float64)
        _check_finite("gradient", g)
        if self._seen < self.warmup_steps:
            self._seen += 1
            self._mean_grad_norm += (
                float(np.linalg.norm(g)) - self._mean_grad_norm
            ) / self._seen
        sigma = self.eta_prime * self._mean_grad_norm / np.sqrt(objective.dimension)
        loss_before = float(objective.evaluate(theta))
        tentative = theta - self.eta * g
        loss_tentative = float(objective.evaluate(tentative))
        gnorm = float(np.linalg.norm(g))
        if loss_tentative > loss_before:
            if sigma > 0:
                if self.noise == "gaussian":
                    kick = self.rng.normal(0.0, sigma, size=theta.shape)
                else:
                    half_width = sigma * np.sqrt(3.0)
                    kick = self.rng.uniform(-half_width, half_width, size=theta.shape)
            else:
                kick = np.zeros_like(theta)
            new_theta = theta + kick
            loss_after = float(objective.evaluate(new_theta))
            event = StepEvent("reversal", loss_before, loss_after, gnorm, loss_tentative)
        else:
            new_theta = tentative
            event = StepEvent(
                "descent_accepted", loss_before, loss_tentative, gnorm, loss_tentative
            )
        return new_theta, event


class RandomReinit:
    """SGD plus a plateau detector that resamples parameters wholesale.

    When the mean gradient norm over the last window steps (a full window)
    drops below threshold, every parameter is redrawn from U[-pi, pi] and the
    window is cleared. Re-initializations are tagged kind="reversal" with
    loss_tentative=None since no accept test ran.
    """

    def __init__(
        self,
        eta: float,
        rng: np.random.Generator,
        window: int = 20,
        threshold: float = 1e-3,
    ):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        if not threshold > 0:
            raise ValueError(f"threshold must be positive, got {threshold}")
        self.eta = eta
        self.rng = rng
        self.window = window
        self.threshold = threshold
        self._recent: deque[float] = deque(maxlen=window)

    def reset(self) -> None:
        self._recent.clear()

    def step(self, objective: Objective, theta: np.ndarray) -> tuple[np.ndarray, StepEvent]:
        g = np.asarray(objective.gradient(theta), dtype=np.float64)
        _check_finite("gradient", g)
        gnorm = float(np.linalg.norm(g))
        self._recent.append(gnorm)
        loss_before = float(objective.evaluate(theta))
        if len(self._recent) == self.window and np.mean(self._recent) < self.threshold:
            new_theta = self.rng.uniform(-np.pi, np.pi, size=theta.shape)
            self._recent.clear()
            loss_after = float(objective.evaluate(new_theta))
            event = StepEvent("reversal", loss_before, loss_after, gnorm, None)
        else:
            new_theta = theta - self.eta * g
            loss_after = float(objective.evaluate(new_theta))
            event = StepEvent("descent_accepted", loss_before, loss_after, gnorm)
        return new_theta, event


def train(
    objective,
    optimizer,
    theta0: np.ndarray,
    steps: int,
    batcher: Callable[[int], Sequence] | None = None,
    full_cost_fn: Callable[[np.ndarray], float] | None = None,
    full_cost_every: int = 0,
) -> TrainTrace:
    """Run the optimizer for a fixed number of steps.

    With batcher=None, objective is a single Objective used every step. With
    a batcher, objective must be a factory objective(batch, step) -> Objective
    and each step draws its mini-batch as batcher(step); the accept test then
    runs on that step's batch. full_cost_fn (typically the full-dataset loss)
    is logged every full_cost_every steps and at the final step.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    theta = np.asarray(theta0, dtype=np.float64).copy()
    events: list[StepEvent] = []
    losses = np.empty(steps)
    grad_norms = np.empty(steps)
    full_losses: list[tuple[int, float]] = []
    for t in range(steps):
        step_objective = objective if batcher is None else objective(batcher(t), t)
        theta, event = optimizer.step(step_objective, theta)
        events.append(event)
        losses[t] = event.loss_after
        grad_norms[t] = event.grad_norm
        if full_cost_fn is not None:
            logged = full_cost_every > 0 and (t + 1) % full_cost_every == 0
            if logged or t == steps - 1:
                full_losses.append((t, float(full_cost_fn(theta))))
    reversal_count = sum(1 for e in events if e.kind == "reversal")
    return TrainTrace(events, losses, grad_norms, theta, reversal_count, full_losses)
