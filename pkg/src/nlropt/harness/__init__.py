"""Experiment harness: configuration, seeded runners, persistence, CLI."""

from .config import ConfigError, ExperimentConfig, build_config, parse_config_file
from .runner import (
    ComparisonResult,
    ExperimentReport,
    SweepResult,
    compare_optimizers,
    execute,
    make_optimizer,
    sweep,
)

__all__ = [
    "ComparisonResult",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "SweepResult",
    "build_config",
    "compare_optimizers",
    "execute",
    "make_optimizer",
    "parse_config_file",
    "sweep",
]
