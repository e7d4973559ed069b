"""Experiment configuration: defaults, file parsing, and validation.

A config is a flat set of typed fields. Values merge with precedence
defaults < config file < explicit overrides (CLI flags), and every unknown
key or unparseable value is a hard ConfigError: silent typos invalidate
sweeps, so nothing is ignored.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

OPTIMIZER_NAMES = (
    "nlr",
    "sgd",
    "momentum",
    "rmsprop",
    "adam",
    "backtrack",
    "perturb_gauss",
    "perturb_uniform",
    "reinit",
)

SCHEDULES = ("constant", "inverse_t")

MAX_QUBITS = 14


class ConfigError(ValueError):
    """Invalid experiment configuration; raised before any compute."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One training run, fully specified.

    shots=0 means exact expectations; noise_sigma is the per-component
    standard deviation of additive Gaussian gradient noise (0 disables it).
    csv_path replaces the synthetic dataset when set. out names the output
    directory and never affects results.

    The default separation and noise_sigma put the default run in the
    noise-dominated regime: the synthetic classes are cleanly separable,
    so the achievable loss is near zero, while per-component noise of 2.0
    swamps the true gradient and the accept test has real work to do.
    """

    qubits: int = 6
    layers: int = 5
    dimension: int = 8
    train_size: int = 1000
    separation: float = 24.0
    train_fraction: float = 0.8
    csv_path: str | None = None
    opt: str = "nlr"
    eta: float = 0.01
    eta_prime: float = 0.02
    nu: float = 0.0
    schedule: str = "constant"
    noise_sigma: float = 2.0
    batch: int = 32
    steps: int = 500
    shots: int = 1000
    full_loss_every: int = 50
    momentum_beta: float = 0.9
    rms_decay: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    perturb_warmup: int = 100
    reinit_window: int = 20
    reinit_threshold: float = 1e-3
    seed: int = 0
    out: str | None = None

    def __post_init__(self) -> None:
        def require(ok: bool, message: str) -> None:
            if not ok:
                raise ConfigError(message)

        require(
            2 <= self.qubits <= MAX_QUBITS,
            f"qubits must be in [2, {MAX_QUBITS}], got {self.qubits}",
        )
        require(self.layers >= 1, f"layers must be >= 1, got {self.layers}")
        require(self.dimension >= 2, f"dimension must be >= 2, got {self.dimension}")
        # With a CSV the feature dimension comes from the file, so capacity
        # is checked against the loaded data instead (see runner.execute).
        if self.csv_path is None:
            require(
                self.dimension <= 2**self.qubits,
                f"dimension {self.dimension} exceeds amplitude capacity"
                f" 2**{self.qubits} = {2**self.qubits}",
            )
        require(self.train_size >= 2, f"train_size must be >= 2, got {self.train_size}")
        require(
            self.separation > 0, f"separation must be positive, got {self.separation}"
        )
        require(
            0.0 < self.train_fraction < 1.0,
            f"train_fraction must be in (0, 1), got {self.train_fraction}",
        )
        require(
            self.opt in OPTIMIZER_NAMES,
            f"unknown optimizer {self.opt!r}; choose from {', '.join(OPTIMIZER_NAMES)}",
        )
        require(self.eta > 0, f"eta must be positive, got {self.eta}")
        require(self.eta_prime > 0, f"eta_prime must be positive, got {self.eta_prime}")
        require(self.nu >= 0, f"nu must be >= 0, got {self.nu}")
        require(
            self.schedule in SCHEDULES,
            f"unknown schedule {self.schedule!r}; choose from {', '.join(SCHEDULES)}",
        )
        require(
            self.noise_sigma >= 0, f"noise_sigma must be >= 0, got {self.noise_sigma}"
        )
        require(self.batch >= 1, f"batch must be >= 1, got {self.batch}")
        require(self.steps >= 1, f"steps must be >= 1, got {self.steps}")
        require(self.shots >= 0, f"shots must be >= 0, got {self.shots}")
        require(
            self.full_loss_every >= 0,
            f"full_loss_every must be >= 0, got {self.full_loss_every}",
        )
        require(
            self.perturb_warmup >= 0,
            f"perturb_warmup must be >= 0, got {self.perturb_warmup}",
        )
        require(
            self.reinit_window >= 1,
            f"reinit_window must be >= 1, got {self.reinit_window}",
        )
        require(
            self.reinit_threshold > 0,
            f"reinit_threshold must be positive, got {self.reinit_threshold}",
        )
        require(self.seed >= 0, f"seed must be >= 0, got {self.seed}")

    def echo(self) -> dict:
        """Result-determining fields as a plain dict, for persistence.

        Excludes out: the output location is plumbing, so runs of the same
        experiment into different directories persist identical bytes.
        """
        return {
            f.name: getattr(self, f.name) for f in fields(self) if f.name != "out"
        }

    def digest(self) -> str:
        """Stable hash of the result-determining fields, for run-dir naming."""
        text = "\n".join(f"{k}={v!r}" for k, v in sorted(self.echo().items()))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **overrides)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key: str, raw: str, where: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {key}={raw!r} as {kind}") from None


def parse_config_file(path: str) -> dict:
    """Flat key=value lines; # comments and blank lines are skipped."""
    values: dict = {}
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            where = f"{path}:{number}"
            if "=" not in text:
                raise ConfigError(f"{where}: expected key=value, got {text!r}")
            key, _, raw = text.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _FIELD_TYPES or key == "out":
                raise ConfigError(f"{where}: unknown config key {key!r}")
            if key in values:
                raise ConfigError(f"{where}: duplicate config key {key!r}")
            values[key] = _convert(key, raw, where)
    return values


def build_config(config_file: str | None = None, **overrides) -> ExperimentConfig:
    """Merge defaults, an optional config file, and explicit overrides.

    Overrides with value None are treated as absent so optional CLI flags
    pass through untouched.
    """
    merged: dict = {}
    if config_file is not None:
        merged.update(parse_config_file(config_file))
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = value
    return ExperimentConfig(**merged)


def write_config_file(config: ExperimentConfig, path: str) -> None:
    """Persist the result-determining fields in the parseable file format."""
    lines = []
    for key, value in config.echo().items():
        if value is None:
            continue
        lines.append(f"{key}={value}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
