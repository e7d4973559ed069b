"""Seeded experiment execution: data, circuit, training, and aggregation.

Every random draw comes from a stream derived as SeedSequence([seed, tag,
...]) with a fixed integer tag per purpose, so (config, seed) determines
every number exactly and runs that share a seed share their dataset, split,
and initial parameters regardless of optimizer or swept value.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..ansatz import Sample, accuracy, batch_loss, build_ansatz
from ..autodiff import parameter_shift_gradient
from ..datagen import Dataset, load_csv_dataset, split_train_test, synthetic_gaussian_dataset
from ..landscape import NoisyObjective
from ..optim import (
    Adam,
    ArmijoBacktracking,
    Momentum,
    Nlr,
    NlrConfig,
    PerturbedDescent,
    RandomReinit,
    RmsProp,
    Sgd,
    TrainTrace,
    train,
)
from ..qsim import ShotConfig
from .config import ConfigError, ExperimentConfig

_STREAM_INIT = 1
_STREAM_BATCH = 2
_STREAM_OPT = 3
_STREAM_NOISE = 4
_STREAM_SHOTS = 5

SWEEPABLE = (
    "eta_prime",
    "steps",
    "dimension",
    "layers",
    "noise_sigma",
    "train_size",
    "opt",
)


@dataclass(frozen=True)
class ExperimentReport:
    """One run's results. wall_time_seconds is diagnostic only and is never
    persisted; everything else is recomputable from the trace and config."""

    config: dict
    final_loss: float
    final_gradient_norm: float
    accuracy_percent: float
    reversal_count: int
    final_parameters: tuple[float, ...]
    wall_time_seconds: float
    trace: TrainTrace


def _stream(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *tags]))


class _CircuitBatchObjective:
    """Mean squared-error loss over one mini-batch and its parameter-shift
    gradient.

    In shot mode every evaluation draws from a fresh stream tagged by (seed,
    step, call index), so the accept test sees independent estimates and the
    whole run stays deterministic under any evaluation order.
    """

    def __init__(self, spec, batch, shots: int, seed: int, step: int):
        self.spec = spec
        self.batch = batch
        self.shots = shots
        self.seed = seed
        self.step = step
        self.dimension = spec.parameter_count
        self._calls = 0

    def _shot_config(self) -> ShotConfig | None:
        if self.shots == 0:
            return None
        seq = np.random.SeedSequence(
            [self.seed, _STREAM_SHOTS, self.step, self._calls]
        )
        self._calls += 1
        return ShotConfig(self.shots, int(seq.generate_state(1)[0]))

    def evaluate(self, theta: np.ndarray) -> float:
        return batch_loss(self.spec, theta, self.batch, self._shot_config())

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        return parameter_shift_gradient(
            self.spec, theta, self.batch, self._shot_config()
        )


def make_optimizer(config: ExperimentConfig, rng: np.random.Generator):
    """Instantiate config.opt with the config's rates and constants."""
    name, eta = config.opt, config.eta
    if name == "nlr":
        cfg = NlrConfig(
            eta=eta,
            eta_prime=config.eta_prime,
            noise_rate_nu=config.nu,
            circuit_depth_L=config.layers,
        )
        return Nlr(cfg, schedule=config.schedule)
    if name == "sgd":
        return Sgd(eta)
    if name == "momentum":
        return Momentum(eta, beta=config.momentum_beta)
    if name == "rmsprop":
        return RmsProp(eta, decay=config.rms_decay, eps=config.adam_eps)
    if name == "adam":
        return Adam(eta, config.adam_beta1, config.adam_beta2, config.adam_eps)
    if name == "backtrack":
        return ArmijoBacktracking(eta, c=config.armijo_c, shrink=config.armijo_shrink)
    if name == "perturb_gauss":
        return PerturbedDescent(
            eta, config.eta_prime, "gaussian", rng, config.perturb_warmup
        )
    if name == "perturb_uniform":
        return PerturbedDescent(
            eta, config.eta_prime, "uniform", rng, config.perturb_warmup
        )
    if name == "reinit":
        return RandomReinit(
            eta, rng, window=config.reinit_window, threshold=config.reinit_threshold
        )
    raise ConfigError(f"unknown optimizer {name!r}")


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.csv_path is not None:
        return load_csv_dataset(config.csv_path)
    return synthetic_gaussian_dataset(
        d=config.dimension,
        n=config.train_size,
        separation=config.separation,
        seed=config.seed,
    )


def execute(config: ExperimentConfig) -> ExperimentReport:
    """Run one experiment in memory (no files written)."""
    started = time.perf_counter()
    dataset = load_dataset(config)
    if dataset.dimension > 2**config.qubits:
        raise ConfigError(
            f"dimension {dataset.dimension} exceeds amplitude capacity"
            f" 2**{config.qubits} = {2**config.qubits}"
        )
    train_set, test_set = split_train_test(
        dataset, config.train_fraction, seed=config.seed
    )
    if config.batch > len(train_set):
        raise ConfigError(
            f"batch {config.batch} exceeds training set size {len(train_set)}"
        )
    spec = build_ansatz(config.qubits, config.layers)
    theta0 = _stream(config.seed, _STREAM_INIT).uniform(
        -np.pi, np.pi, size=spec.parameter_count
    )

    batch_rng = _stream(config.seed, _STREAM_BATCH)
    train_samples: tuple[Sample, ...] = train_set.samples

    def batcher(step: int):
        idx = batch_rng.choice(len(train_samples), size=config.batch, replace=False)
        return [train_samples[i] for i in idx]

    noise_rng = _stream(config.seed, _STREAM_NOISE)

    def objective_factory(batch, step: int):
        base = _CircuitBatchObjective(spec, batch, config.shots, config.seed, step)
        if config.noise_sigma > 0:
            return NoisyObjective(
                base, config.noise_sigma, noise_rng, per_component=True
            )
        return base

    optimizer = make_optimizer(config, _stream(config.seed, _STREAM_OPT))

    def full_train_loss(theta: np.ndarray) -> float:
        return batch_loss(spec, theta, train_samples)

    trace = train(
        objective_factory,
        optimizer,
        theta0,
        steps=config.steps,
        batcher=batcher,
        full_cost_fn=full_train_loss,
        full_cost_every=config.full_loss_every,
    )
    theta_final = trace.final_parameters
    return ExperimentReport(
        config=config.echo(),
        final_loss=trace.full_losses[-1][1],
        final_gradient_norm=float(trace.grad_norms[-1]),
        accuracy_percent=accuracy(spec, theta_final, test_set),
        reversal_count=trace.reversal_count,
        final_parameters=tuple(float(x) for x in theta_final),
        wall_time_seconds=time.perf_counter() - started,
        trace=trace,
    )


def _execute_many(configs: list[ExperimentConfig]) -> list[ExperimentReport]:
    """Run independent cells concurrently; results keep input order."""
    if len(configs) == 1:
        return [execute(configs[0])]
    with ThreadPoolExecutor() as pool:
        return list(pool.map(execute, configs))


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: tuple
    n_seeds: int
    reports: tuple[tuple[ExperimentReport, ...], ...]

    def aggregate_rows(self) -> list[dict]:
        rows = []
        for value, cell in zip(self.values, self.reports):
            rows.append(_summarize(cell, first_key="value", first_value=value))
        return rows


@dataclass(frozen=True)
class ComparisonResult:
    optimizers: tuple[str, ...]
    n_seeds: int
    reports: tuple[tuple[ExperimentReport, ...], ...]

    def aggregate_rows(self) -> list[dict]:
        rows = []
        for name, cell in zip(self.optimizers, self.reports):
            rows.append(_summarize(cell, first_key="optimizer", first_value=name))
        return rows


def _summarize(cell, first_key: str, first_value) -> dict:
    losses = np.array([r.final_loss for r in cell])
    accs = np.array([r.accuracy_percent for r in cell])
    norms = np.array([r.final_gradient_norm for r in cell])
    reversals = np.array([r.reversal_count for r in cell])
    return {
        first_key: first_value,
        "n_seeds": len(cell),
        "mean_final_loss": float(losses.mean()),
        "std_final_loss": float(losses.std()),
        "mean_accuracy_percent": float(accs.mean()),
        "std_accuracy_percent": float(accs.std()),
        "mean_final_gradient_norm": float(norms.mean()),
        "std_final_gradient_norm": float(norms.std()),
        "mean_reversal_count": float(reversals.mean()),
    }


def _seed_variants(config: ExperimentConfig, n_seeds: int) -> list[int]:
    if n_seeds < 1:
        raise ConfigError(f"n_seeds must be >= 1, got {n_seeds}")
    return [config.seed + k for k in range(n_seeds)]


def sweep(
    config: ExperimentConfig, parameter: str, values, n_seeds: int = 1
) -> SweepResult:
    """One run per (value, seed) with everything else held fixed.

    Runs sharing a seed share data and initial parameters, so differences
    across values are attributable to the swept parameter alone.
    """
    if parameter not in SWEEPABLE:
        raise ConfigError(
            f"cannot sweep {parameter!r}; choose from {', '.join(SWEEPABLE)}"
        )
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    seeds = _seed_variants(config, n_seeds)
    cells = [
        [config.with_overrides(**{parameter: value, "seed": s}) for s in seeds]
        for value in values
    ]
    flat = _execute_many([c for cell in cells for c in cell])
    reports = tuple(
        tuple(flat[i * n_seeds : (i + 1) * n_seeds]) for i in range(len(values))
    )
    return SweepResult(
        parameter=parameter, values=tuple(values), n_seeds=n_seeds, reports=reports
    )


def compare_optimizers(
    config: ExperimentConfig, optimizers, n_seeds: int = 1
) -> ComparisonResult:
    """Per-optimizer summary over shared seeds (same data and theta0)."""
    optimizers = list(optimizers)
    if len(optimizers) < 2:
        raise ConfigError("comparison needs at least two optimizers")
    if len(set(optimizers)) != len(optimizers):
        raise ConfigError("duplicate optimizer names in comparison")
    seeds = _seed_variants(config, n_seeds)
    cells = [
        [config.with_overrides(opt=name, seed=s) for s in seeds]
        for name in optimizers
    ]
    flat = _execute_many([c for cell in cells for c in cell])
    reports = tuple(
        tuple(flat[i * n_seeds : (i + 1) * n_seeds]) for i in range(len(optimizers))
    )
    return ComparisonResult(
        optimizers=tuple(optimizers), n_seeds=n_seeds, reports=reports
    )
