"""Analytic testbeds and statistical verifiers for the diffusion theory.

The two-dimensional plateau surface is a Gaussian well on a gently tilted
plane: flat almost everywhere (gradient below plateau_eps), with a narrow
cave holding the minimum. On the flat region a noisy gradient is almost pure
noise, so descent steps fail roughly half the time; how an optimizer responds
to those failures determines how fast it diffuses, and hence how fast it can
stumble into the cave. The verifiers here measure that diffusion coefficient,
first-passage exit times, the violation rate as a function of true gradient
size, and the post-escape noise floor on a strongly convex bowl.

Trajectory ensembles use one derived seed per trajectory, so results are
independent of execution order; aggregation uses compensated summation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .optim import Nlr, NlrConfig, StepEvent

Optimizer = Callable  # anything exposing step(objective, theta) -> (theta, StepEvent)
OptimizerFactory = Callable[[np.random.Generator], object]


@dataclass(frozen=True)
class PlateauSurface:
    """Gaussian cave on a near-flat tilted plane.

    plateau_eps is the gradient bound defining the flat region; points at
    least min_cave_distance from the cave (see sample_plateau_start) satisfy
    it for the default geometry.
    """

    cave_center: tuple[float, float] = (-2.0, -2.0)
    cave_depth: float = 1.0
    cave_width: float = 0.4
    background_slope: float = 1e-4
    plateau_eps: float = 1e-3

    def __post_init__(self) -> None:
        if not self.cave_depth > 0:
            raise ValueError(f"cave_depth must be positive, got {self.cave_depth}")
        if not self.cave_width > 0:
            raise ValueError(f"cave_width must be positive, got {self.cave_width}")
        if self.background_slope < 0:
            raise ValueError(
                f"background_slope must be >= 0, got {self.background_slope}"
            )
        if not self.plateau_eps > 0:
            raise ValueError(f"plateau_eps must be positive, got {self.plateau_eps}")


def plateau_cost(point: np.ndarray, surface: PlateauSurface) -> float:
    """C(x, y) = -A exp(-((x-cx)^2 + (y-cy)^2) / (2 s^2)) + b (x + y)."""
    x, y = float(point[0]), float(point[1])
    cx, cy = surface.cave_center
    sq = (x - cx) ** 2 + (y - cy) ** 2
    well = -surface.cave_depth * math.exp(-sq / (2.0 * surface.cave_width**2))
    return well + surface.background_slope * (x + y)


def plateau_gradient(point: np.ndarray, surface: PlateauSurface) -> np.ndarray:
    """Exact gradient of plateau_cost."""
    x, y = float(point[0]), float(point[1])
    cx, cy = surface.cave_center
    s_sq = surface.cave_width**2
    sq = (x - cx) ** 2 + (y - cy) ** 2
    scale = surface.cave_depth * math.exp(-sq / (2.0 * s_sq)) / s_sq
    b = surface.background_slope
    return np.array([scale * (x - cx) + b, scale * (y - cy) + b])


class PlateauObjective:
    """The plateau surface as a two-dimensional optimization objective."""

    dimension = 2

    def __init__(self, surface: PlateauSurface):
        self.surface = surface

    def evaluate(self, theta: np.ndarray) -> float:
        return plateau_cost(theta, self.surface)

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        return plateau_gradient(theta, self.surface)


class TiltedQuadratic:
    """C(theta) = tilt * (u . theta) + (curvature/2) ||theta||^2.

    u is the normalized all-ones direction, so the gradient norm at the
    origin equals |tilt| exactly; curvature sets the (isotropic) Hessian.
    """

    def __init__(self, dimension: int, curvature: float, tilt: float = 0.0):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension
        self.curvature = curvature
        self.tilt = tilt
        self.direction = np.ones(dimension) / np.sqrt(dimension)

    def evaluate(self, theta: np.ndarray) -> float:
        return float(
            self.tilt * (self.direction @ theta)
            + 0.5 * self.curvature * (theta @ theta)
        )

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        return self.tilt * self.direction + self.curvature * theta


class NoisyObjective:
    """Exact cost with additive Gaussian gradient noise.

    Default covariance is (sigma^2 / dim) I, so the total noise power
    E||xi||^2 equals sigma^2 regardless of dimension. per_component=True
    switches to sigma^2 I (sigma per component) for targets whose noise is
    specified component-wise. evaluate stays exact; only gradients consume
    the stream.
    """

    def __init__(
        self,
        base,
        sigma: float,
        rng: np.random.Generator | int,
        per_component: bool = False,
    ):
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        self.base = base
        self.sigma = sigma
        self.dimension = base.dimension
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.scale = sigma if per_component else sigma / np.sqrt(base.dimension)

    def evaluate(self, theta: np.ndarray) -> float:
        return self.base.evaluate(theta)

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        g = np.asarray(self.base.gradient(theta), dtype=np.float64)
        if self.sigma == 0:
            return g
        return g + self.rng.normal(0.0, self.scale, size=self.dimension)


@dataclass(frozen=True)
class DiffusionReport:
    d_hat: float
    p_hat: float
    trajectories: int
    steps_per_trajectory: int
    confidence_halfwidth: float


@dataclass(frozen=True)
class ExitTimeReport:
    mean_exit_step: float
    median_exit_step: float
    censoring_fraction: float
    n_trials: int
    exit_steps: tuple[int, ...]
    inconclusive: bool


@dataclass(frozen=True)
class PostEscapeReport:
    mean_final_sq_grad_norm: float
    floor_estimate: float
    n_seeds: int
    steps: int


def sample_plateau_start(
    surface: PlateauSurface,
    rng: np.random.Generator,
    box: float = 3.0,
    min_cave_distance: float = 2.0,
    max_tries: int = 10_000,
) -> np.ndarray:
    """Rejection-sample a certified flat point: far from the cave and with
    gradient norm at most plateau_eps."""
    center = np.asarray(surface.cave_center)
    for _ in range(max_tries):
        point = rng.uniform(-box, box, size=2)
        if np.linalg.norm(point - center) < min_cave_distance:
            continue
        if np.linalg.norm(plateau_gradient(point, surface)) <= surface.plateau_eps:
            return point
    raise RuntimeError(
        "no plateau point found; surface parameters leave no certified flat region"
    )


def _trajectory_streams(seed: int, index: int) -> tuple[np.random.Generator, ...]:
    children = np.random.SeedSequence([seed, index]).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def estimate_diffusion(
    make_optimizer: OptimizerFactory,
    make_objective: Callable[[np.random.Generator], object],
    start_sampler: Callable[[np.random.Generator], np.ndarray],
    n_trajectories: int,
    steps: int,
    seed: int,
) -> DiffusionReport:
    """Estimate the diffusion coefficient D = E||dtheta||^2 / (2 dim).

    Runs n_trajectories independent walks of the given length, each with its
    own derived (start, noise, optimizer) streams, and reports the mean
    squared per-step displacement normalized by 2*dim together with the
    violation (reversal) rate. The confidence halfwidth is a 95% bootstrap
    interval over per-trajectory means (1000 resamples).
    """
    total = n_trajectories * steps
    if total < 100:
        raise ValueError(
            f"need at least 100 total steps for stable statistics, got {total}"
        )
    per_traj_mean_sq: list[float] = []
    violations = 0
    dimension = None
    for k in range(n_trajectories):
        start_rng, noise_rng, opt_rng = _trajectory_streams(seed, k)
        objective = make_objective(noise_rng)
        optimizer = make_optimizer(opt_rng)
        dimension = objective.dimension
        theta = np.asarray(start_sampler(start_rng), dtype=np.float64)
        sq_disp = []
        for _ in range(steps):
            new_theta, event = optimizer.step(objective, theta)
            sq_disp.append(float(np.sum((new_theta - theta) ** 2)))
            if event.kind == "reversal":
                violations += 1
            theta = new_theta
        per_traj_mean_sq.append(math.fsum(sq_disp) / steps)
    d_hat = math.fsum(per_traj_mean_sq) / n_trajectories / (2.0 * dimension)
    boot_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB007]))
    means = np.array(per_traj_mean_sq)
    resamples = boot_rng.choice(means, size=(1000, n_trajectories), replace=True).mean(
        axis=1
    ) / (2.0 * dimension)
    low, high = np.percentile(resamples, [2.5, 97.5])
    return DiffusionReport(
        d_hat=d_hat,
        p_hat=violations / total,
        trajectories=n_trajectories,
        steps_per_trajectory=steps,
        confidence_halfwidth=float((high - low) / 2.0),
    )


def measure_exit_time(
    make_optimizer: OptimizerFactory,
    make_objective: Callable[[np.random.Generator], object],
    start: np.ndarray,
    radius: float,
    n_trials: int,
    max_steps: int = 100_000,
    seed: int = 0,
) -> ExitTimeReport:
    """First-passage step counts out of the ball of the given radius.

    Trials that never leave within max_steps are censored: excluded from the
    mean and median, with the censoring fraction reported. All-censored
    results set inconclusive instead of raising.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    start = np.asarray(start, dtype=np.float64)
    exit_steps: list[int] = []
    censored = 0
    for k in range(n_trials):
        _, noise_rng, opt_rng = _trajectory_streams(seed, k)
        objective = make_objective(noise_rng)
        optimizer = make_optimizer(opt_rng)
        theta = start.copy()
        for t in range(1, max_steps + 1):
            theta, _ = optimizer.step(objective, theta)
            if np.linalg.norm(theta - start) >= radius:
                exit_steps.append(t)
                break
        else:
            censored += 1
    if exit_steps:
        mean = math.fsum(exit_steps) / len(exit_steps)
        median = float(np.median(exit_steps))
        inconclusive = False
    else:
        mean = math.nan
        median = math.nan
        inconclusive = True
    return ExitTimeReport(
        mean_exit_step=mean,
        median_exit_step=median,
        censoring_fraction=censored / n_trials,
        n_trials=n_trials,
        exit_steps=tuple(exit_steps),
        inconclusive=inconclusive,
    )


def violation_rate_vs_gradient(
    make_optimizer: OptimizerFactory,
    gradient_scales: Sequence[float],
    sigma: float,
    dimension: int = 10,
    curvature: float = 0.1,
    trials_per_scale: int = 10_000,
    seed: int = 0,
) -> list[tuple[float, float]]:
    """Violation rate of one accept-tested step vs the true gradient norm.

    Each scale gamma defines a tilted quadratic whose gradient at the origin
    has norm exactly gamma; every trial takes a single step from the origin
    under fresh gradient noise and records whether the tentative descent was
    rejected. Zero-noise descent on the pure bowl never violates, while on a
    flat-to-the-noise surface the bowl's curvature term dominates.
    """
    results: list[tuple[float, float]] = []
    theta0 = None
    for i, gamma in enumerate(gradient_scales):
        base = TiltedQuadratic(dimension, curvature, tilt=float(gamma))
        noise_rng, opt_rng = (
            np.random.default_rng(c)
            for c in np.random.SeedSequence([seed, i]).spawn(2)
        )
        objective = NoisyObjective(base, sigma, rng=noise_rng)
        theta0 = np.zeros(dimension)
        violations = 0
        for _ in range(trials_per_scale):
            optimizer = make_optimizer(opt_rng)
            _, event = optimizer.step(objective, theta0)
            if event.kind == "reversal":
                violations += 1
        results.append((float(gamma), violations / trials_per_scale))
    return results


def post_escape_convergence(
    cfg: NlrConfig,
    sigma: float,
    dimension: int = 10,
    curvature: float = 0.5,
    steps: int = 2000,
    n_seeds: int = 50,
    seed: int = 0,
    schedule: str = "constant",
    warmup_steps: int = 0,
) -> PostEscapeReport:
    """Exact squared gradient norm reached on a noisy strongly convex bowl.

    Each seed starts on the unit sphere and runs the negative-learning-rate
    optimizer for the given number of steps; the floor estimate averages the
    exact ||grad C||^2 over the last quarter of each run, then over seeds.
    warmup_steps unrecorded fixed-rate steps precede the measured run, so
    schedule comparisons start from the same stationary neighborhood (a
    decaying rate applied from a cold start moves too slowly to reach the
    floor at all).
    """
    if not cfg.eta * curvature < 1.0:
        raise ValueError("eta must be below 1/curvature for stable descent")
    finals: list[float] = []
    tails: list[float] = []
    tail_len = max(1, steps // 4)
    for s in range(n_seeds):
        start_rng, noise_rng, _ = _trajectory_streams(seed, s)
        direction = start_rng.normal(size=dimension)
        theta = direction / np.linalg.norm(direction)
        base = TiltedQuadratic(dimension, curvature)
        objective = NoisyObjective(base, sigma, rng=noise_rng)
        warm = Nlr(cfg, schedule="constant")
        for _ in range(warmup_steps):
            theta, _ = warm.step(objective, theta)
        optimizer = Nlr(cfg, schedule=schedule)
        sq_grad = np.empty(steps)
        for t in range(steps):
            theta, _ = optimizer.step(objective, theta)
            sq_grad[t] = curvature**2 * float(theta @ theta)
        finals.append(sq_grad[-1])
        tails.append(float(sq_grad[-tail_len:].mean()))
    return PostEscapeReport(
        mean_final_sq_grad_norm=math.fsum(finals) / n_seeds,
        floor_estimate=math.fsum(tails) / n_seeds,
        n_seeds=n_seeds,
        steps=steps,
    )


def plateau_grid(
    surface: PlateauSurface,
    x_min: float = -3.0,
    x_max: float = 3.0,
    y_min: float = -3.0,
    y_max: float = 3.0,
    points: int = 50,
) -> np.ndarray:
    """(points^2, 4) rows of (x, y, cost, grad_norm), x varying slowest."""
    if points < 2:
        raise ValueError(f"points must be >= 2, got {points}")
    xs = np.linspace(x_min, x_max, points)
    ys = np.linspace(y_min, y_max, points)
    rows = np.empty((points * points, 4))
    i = 0
    for x in xs:
        for y in ys:
            point = np.array([x, y])
            rows[i, 0] = x
            rows[i, 1] = y
            rows[i, 2] = plateau_cost(point, surface)
            rows[i, 3] = np.linalg.norm(plateau_gradient(point, surface))
            i += 1
    return rows
