"""Command-line entry point.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime or numeric
error, 4 I/O error. The NLROPT_OUT environment variable sets the default
output root; --out overrides it per invocation. Run directories are named by
a digest of the result-determining configuration, so reruns land in the same
place and overwrite byte-identically.
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .. import landscape as ls
from ..datagen import save_csv_dataset, synthetic_gaussian_dataset
from ..optim import NlrConfig
from .config import (
    ConfigError,
    ExperimentConfig,
    OPTIMIZER_NAMES,
    SCHEDULES,
    build_config,
    write_config_file,
)
from . import reporting
from .runner import (
    SWEEPABLE,
    compare_optimizers,
    execute,
    make_optimizer,
    sweep as run_sweep,
)

_SWEEP_TYPES = {
    "eta_prime": float,
    "steps": int,
    "dimension": int,
    "layers": int,
    "noise_sigma": float,
    "train_size": int,
    "opt": str,
}


def _output_root() -> Path:
    return Path(os.environ.get("NLROPT_OUT", "runs"))


def _run_dir(out: str | None, kind: str, token: str) -> Path:
    if out is not None:
        return Path(out)
    return _output_root() / f"{kind}-{token[:12]}"


def _digest(*parts) -> str:
    return hashlib.sha256("|".join(str(p) for p in parts).encode()).hexdigest()


def _config_options(include_opt: bool = True):
    options = [
        click.option("--config", "config_file", default=None, help="key=value config file"),
        click.option("--qubits", type=int, default=None),
        click.option("--layers", type=int, default=None),
        click.option("--dimension", type=int, default=None),
        click.option("--train-size", "train_size", type=int, default=None),
        click.option("--separation", type=float, default=None),
        click.option("--train-fraction", "train_fraction", type=float, default=None),
        click.option("--csv", "csv_path", default=None, help="train on this dataset file"),
        click.option("--eta", type=float, default=None),
        click.option("--eta-prime", "eta_prime", type=float, default=None),
        click.option("--nu", type=float, default=None),
        click.option("--schedule", type=click.Choice(SCHEDULES), default=None),
        click.option("--noise-sigma", "noise_sigma", type=float, default=None),
        click.option("--batch", type=int, default=None),
        click.option("--steps", type=int, default=None),
        click.option("--shots", type=int, default=None),
        click.option("--full-loss-every", "full_loss_every", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--out", default=None, help="output directory"),
    ]
    if include_opt:
        options.insert(
            8, click.option("--opt", type=click.Choice(OPTIMIZER_NAMES), default=None)
        )

    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group()
def cli():
    """Train small variational circuits and verify plateau-escape behavior."""


@cli.command("gen-data")
@click.option("--dimension", type=int, default=8, show_default=True)
@click.option("--size", type=int, default=1000, show_default=True)
@click.option("--separation", type=float, default=2.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="output CSV path")
def gen_data(dimension, size, separation, seed, out):
    """Write a synthetic two-Gaussian dataset as CSV."""
    dataset = synthetic_gaussian_dataset(
        d=dimension, n=size, separation=separation, seed=seed
    )
    if out is None:
        name = f"dataset-d{dimension}-n{size}-sep{separation}-seed{seed}.csv"
        out = _output_root() / name
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv_dataset(dataset, str(out))
    click.echo(str(out))


@cli.command()
@_config_options()
def train(config_file, out, **flags):
    """Run one training experiment and persist its report and trace."""
    config = build_config(config_file, out=out, **flags)
    run_dir = _run_dir(config.out, "train", config.digest())
    report = execute(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    write_config_file(config, str(run_dir / "config.txt"))
    reporting.persist_report(report, run_dir)
    click.echo(f"wall time: {report.wall_time_seconds:.2f}s", err=True)
    click.echo(str(run_dir))
    click.echo(f"final_loss={reporting.fmt(report.final_loss)}")
    click.echo(f"accuracy_percent={reporting.fmt(report.accuracy_percent)}")
    click.echo(f"reversal_count={report.reversal_count}")


@cli.command("sweep")
@click.option(
    "--parameter", required=True, type=click.Choice(SWEEPABLE), help="field to vary"
)
@click.option("--value", "values", multiple=True, required=True)
@click.option("--n-seeds", "n_seeds", type=int, default=1, show_default=True)
@_config_options()
def sweep_cmd(parameter, values, n_seeds, config_file, out, **flags):
    """Run one experiment per value, holding everything else fixed."""
    config = build_config(config_file, out=out, **flags)
    kind = _SWEEP_TYPES[parameter]
    try:
        typed = [kind(v) for v in values]
    except ValueError:
        raise ConfigError(
            f"sweep values for {parameter} must parse as {kind.__name__}: {values}"
        ) from None
    result = run_sweep(config, parameter, typed, n_seeds=n_seeds)
    run_dir = _run_dir(
        config.out, "sweep", _digest(config.digest(), parameter, typed, n_seeds)
    )
    path = reporting.persist_sweep(result, run_dir)
    wall = sum(r.wall_time_seconds for cell in result.reports for r in cell)
    click.echo(f"wall time: {wall:.2f}s", err=True)
    click.echo(str(path))
    for row in result.aggregate_rows():
        click.echo(
            f"{parameter}={row['value']}"
            f" mean_final_loss={reporting.fmt(row['mean_final_loss'])}"
        )


@cli.command()
@click.option(
    "--opt",
    "optimizers",
    multiple=True,
    type=click.Choice(OPTIMIZER_NAMES),
    required=True,
    help="repeat for each optimizer",
)
@click.option("--n-seeds", "n_seeds", type=int, default=1, show_default=True)
@_config_options(include_opt=False)
def compare(optimizers, n_seeds, config_file, out, **flags):
    """Compare optimizers over shared seeds (same data, same theta0)."""
    config = build_config(config_file, out=out, **flags)
    result = compare_optimizers(config, list(optimizers), n_seeds=n_seeds)
    run_dir = _run_dir(
        config.out, "compare", _digest(config.digest(), optimizers, n_seeds)
    )
    path = reporting.persist_comparison(result, run_dir)
    wall = sum(r.wall_time_seconds for cell in result.reports for r in cell)
    click.echo(f"wall time: {wall:.2f}s", err=True)
    click.echo(str(path))
    for row in result.aggregate_rows():
        click.echo(
            f"{row['optimizer']}:"
            f" mean_final_loss={reporting.fmt(row['mean_final_loss'])}"
            f" mean_accuracy_percent={reporting.fmt(row['mean_accuracy_percent'])}"
        )


@cli.group("landscape")
def landscape_group():
    """Synthetic plateau experiments: surface, diffusion, escape, floors."""


def _plain_optimizer_factory(name: str, eta: float, eta_prime: float):
    """Optimizer factory for landscape runs, reusing the training factory's
    constants via a default config."""
    base = ExperimentConfig(opt=name, eta=eta, eta_prime=eta_prime)
    return lambda rng: make_optimizer(base, rng)


def _plateau_setup(sigma: float):
    surface = ls.PlateauSurface()
    make_objective = lambda rng: ls.NoisyObjective(
        ls.PlateauObjective(surface), sigma, rng
    )
    start_sampler = lambda rng: ls.sample_plateau_start(surface, rng)
    return surface, make_objective, start_sampler


@landscape_group.command()
@click.option("--points", type=int, default=50, show_default=True)
@click.option("--bound", type=float, default=3.0, show_default=True, help="grid half-width")
@click.option("--out", default=None)
def grid(points, bound, out):
    """Dump the plateau surface as (x, y, cost, grad_norm) rows."""
    surface = ls.PlateauSurface()
    values = ls.plateau_grid(
        surface, x_min=-bound, x_max=bound, y_min=-bound, y_max=bound, points=points
    )
    run_dir = _run_dir(out, "landscape-grid", _digest(points, bound))
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / "grid.csv"
    rows = [
        {"x": float(x), "y": float(y), "cost": float(c), "grad_norm": float(g)}
        for x, y, c, g in values
    ]
    reporting.write_rows_csv(rows, ("x", "y", "cost", "grad_norm"), path)
    click.echo(str(path))


@landscape_group.command()
@click.option(
    "--opt",
    "optimizers",
    multiple=True,
    type=click.Choice(OPTIMIZER_NAMES),
    default=("nlr", "backtrack"),
    show_default=True,
)
@click.option("--trajectories", type=int, default=200, show_default=True)
@click.option("--steps", type=int, default=500, show_default=True)
@click.option("--eta", type=float, default=0.01, show_default=True)
@click.option("--eta-prime", "eta_prime", type=float, default=0.02, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None)
def diffusion(optimizers, trajectories, steps, eta, eta_prime, sigma, seed, out):
    """Estimate per-optimizer diffusion coefficients on the noisy plateau."""
    _, make_objective, start_sampler = _plateau_setup(sigma)
    rows = []
    reports = {}
    for name in optimizers:
        report = ls.estimate_diffusion(
            _plain_optimizer_factory(name, eta, eta_prime),
            make_objective,
            start_sampler,
            n_trajectories=trajectories,
            steps=steps,
            seed=seed,
        )
        reports[name] = report
        rows.append(
            {
                "optimizer": name,
                "d_hat": report.d_hat,
                "p_hat": report.p_hat,
                "ci_halfwidth": report.confidence_halfwidth,
                "trajectories": report.trajectories,
                "steps": report.steps_per_trajectory,
            }
        )
    run_dir = _run_dir(
        out,
        "landscape-diffusion",
        _digest(optimizers, trajectories, steps, eta, eta_prime, sigma, seed),
    )
    run_dir.mkdir(parents=True, exist_ok=True)
    reporting.write_rows_csv(
        rows,
        ("optimizer", "d_hat", "p_hat", "ci_halfwidth", "trajectories", "steps"),
        run_dir / "diffusion.csv",
    )
    payload = {"schema_version": reporting.SCHEMA_VERSION, "rows": rows}
    if len(optimizers) >= 2:
        first, second = reports[optimizers[0]], reports[optimizers[1]]
        gap = first.d_hat - second.d_hat
        separated = gap > first.confidence_halfwidth + second.confidence_halfwidth
        payload["verdict"] = {
            "greater": optimizers[0],
            "lesser": optimizers[1],
            "d_hat_gap": gap,
            "separated_95ci": bool(separated),
        }
        click.echo(
            f"d_hat({optimizers[0]})={reporting.fmt(first.d_hat)}"
            f" d_hat({optimizers[1]})={reporting.fmt(second.d_hat)}"
            f" separated_95ci={separated}"
        )
    reporting.write_json(payload, run_dir / "diffusion.json")
    click.echo(str(run_dir / "diffusion.csv"))


@landscape_group.command("exit-time")
@click.option("--radius", "radii", multiple=True, type=float, default=(0.5, 1.0), show_default=True)
@click.option("--trials", type=int, default=50, show_default=True)
@click.option("--max-steps", "max_steps", type=int, default=20000, show_default=True)
@click.option("--eta", type=float, default=0.2, show_default=True)
@click.option("--eta-prime", "eta_prime", type=float, default=0.4, show_default=True)
@click.option("--sigma", type=float, default=1.5, show_default=True)
@click.option("--d-trajectories", "d_trajectories", type=int, default=100, show_default=True)
@click.option("--d-steps", "d_steps", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None)
def exit_time(radii, trials, max_steps, eta, eta_prime, sigma, d_trajectories, d_steps, seed, out):
    """First-passage times out of plateau balls vs the diffusion prediction.

    Defaults use rates and noise where single steps stay small relative to
    the ball, the regime where the R^2/(2D) first-passage scaling applies.
    """
    _, make_objective, start_sampler = _plateau_setup(sigma)
    factory = _plain_optimizer_factory("nlr", eta, eta_prime)
    diffusion_report = ls.estimate_diffusion(
        factory,
        make_objective,
        start_sampler,
        n_trajectories=d_trajectories,
        steps=d_steps,
        seed=seed,
    )
    start = np.array([1.0, 1.0])
    rows = []
    for radius in radii:
        report = ls.measure_exit_time(
            factory,
            make_objective,
            start,
            radius,
            n_trials=trials,
            max_steps=max_steps,
            seed=seed,
        )
        predicted = radius**2 / (2.0 * diffusion_report.d_hat)
        rows.append(
            {
                "radius": radius,
                "mean_exit_step": report.mean_exit_step,
                "median_exit_step": report.median_exit_step,
                "predicted_steps": predicted,
                "ratio": report.mean_exit_step / predicted if predicted > 0 else float("nan"),
                "censoring_fraction": report.censoring_fraction,
                "n_trials": report.n_trials,
            }
        )
    run_dir = _run_dir(
        out,
        "landscape-exit",
        _digest(radii, trials, max_steps, eta, eta_prime, sigma, seed),
    )
    run_dir.mkdir(parents=True, exist_ok=True)
    reporting.write_rows_csv(
        rows,
        (
            "radius",
            "mean_exit_step",
            "median_exit_step",
            "predicted_steps",
            "ratio",
            "censoring_fraction",
            "n_trials",
        ),
        run_dir / "exit.csv",
    )
    reporting.write_json(
        {"schema_version": reporting.SCHEMA_VERSION, "d_hat": diffusion_report.d_hat, "rows": rows},
        run_dir / "exit.json",
    )
    for row in rows:
        click.echo(
            f"radius={row['radius']}"
            f" mean_exit={reporting.fmt(row['mean_exit_step'])}"
            f" predicted={reporting.fmt(row['predicted_steps'])}"
        )
    click.echo(str(run_dir / "exit.csv"))


@landscape_group.command()
@click.option("--scale", "scales", multiple=True, type=float, help="gradient norms to probe")
@click.option("--sigma", type=float, default=0.1, show_default=True)
@click.option("--dimension", type=int, default=10, show_default=True)
@click.option("--curvature", type=float, default=0.1, show_default=True)
@click.option("--trials", type=int, default=2000, show_default=True)
@click.option("--eta", type=float, default=0.01, show_default=True)
@click.option("--eta-prime", "eta_prime", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None)
def violation(scales, sigma, dimension, curvature, trials, eta, eta_prime, seed, out):
    """Accept-test violation rate as the true gradient norm grows."""
    if not scales:
        scales = tuple(m * sigma for m in (0.0, 1.0, 2.0, 5.0, 10.0))
    factory = _plain_optimizer_factory("nlr", eta, eta_prime)
    pairs = ls.violation_rate_vs_gradient(
        factory,
        gradient_scales=list(scales),
        sigma=sigma,
        dimension=dimension,
        curvature=curvature,
        trials_per_scale=trials,
        seed=seed,
    )
    rows = [{"gradient_scale": g, "p_hat": p} for g, p in pairs]
    run_dir = _run_dir(
        out,
        "landscape-violation",
        _digest(scales, sigma, dimension, curvature, trials, eta, eta_prime, seed),
    )
    run_dir.mkdir(parents=True, exist_ok=True)
    reporting.write_rows_csv(rows, ("gradient_scale", "p_hat"), run_dir / "violation.csv")
    for row in rows:
        click.echo(
            f"gradient_scale={reporting.fmt(row['gradient_scale'])}"
            f" p_hat={reporting.fmt(row['p_hat'])}"
        )
    click.echo(str(run_dir / "violation.csv"))


@landscape_group.command("post-escape")
@click.option("--sigma", type=float, default=0.1, show_default=True)
@click.option("--dimension", type=int, default=10, show_default=True)
@click.option("--curvature", type=float, default=0.5, show_default=True)
@click.option("--steps", type=int, default=2000, show_default=True)
@click.option("--n-seeds", "n_seeds", type=int, default=50, show_default=True)
@click.option("--eta", type=float, default=0.01, show_default=True)
@click.option("--eta-prime", "eta_prime", type=float, default=0.02, show_default=True)
@click.option("--schedule", type=click.Choice(SCHEDULES), default="constant", show_default=True)
@click.option("--warmup", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None)
def post_escape(sigma, dimension, curvature, steps, n_seeds, eta, eta_prime, schedule, warmup, seed, out):
    """Squared-gradient floor on a noisy strongly convex bowl."""
    report = ls.post_escape_convergence(
        NlrConfig(eta=eta, eta_prime=eta_prime),
        sigma=sigma,
        dimension=dimension,
        curvature=curvature,
        steps=steps,
        n_seeds=n_seeds,
        seed=seed,
        schedule=schedule,
        warmup_steps=warmup,
    )
    run_dir = _run_dir(
        out,
        "landscape-floor",
        _digest(sigma, dimension, curvature, steps, n_seeds, eta, eta_prime, schedule, warmup, seed),
    )
    run_dir.mkdir(parents=True, exist_ok=True)
    reporting.write_json(
        {
            "schema_version": reporting.SCHEMA_VERSION,
            "mean_final_sq_grad_norm": report.mean_final_sq_grad_norm,
            "floor_estimate": report.floor_estimate,
            "n_seeds": report.n_seeds,
            "steps": report.steps,
        },
        run_dir / "post_escape.json",
    )
    click.echo(f"floor_estimate={reporting.fmt(report.floor_estimate)}")
    click.echo(str(run_dir / "post_escape.json"))


@cli.command("report")
@click.argument("run_dir")
@click.option(
    "--format",
    "fmt_name",
    type=click.Choice(("json", "csv")),
    default="json",
    show_default=True,
)
def report_cmd(run_dir, fmt_name):
    """Re-emit a persisted run report as JSON (stdout) or CSV (file)."""
    payload = reporting.read_json(Path(run_dir) / "report.json")
    if fmt_name == "json":
        click.echo(json.dumps(payload, sort_keys=True, indent=2))
        return
    path = Path(run_dir) / "report.csv"
    reporting.write_rows_csv(
        [{"key": k, "value": v} for k, v in reporting.report_csv_rows(payload)],
        ("key", "value"),
        path,
    )
    click.echo(str(path))


def main(argv: list[str] | None = None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as error:
        click.echo(f"usage error: {error.format_message()}", err=True)
        sys.exit(2)
    except ConfigError as error:
        click.echo(f"config error: {error}", err=True)
        sys.exit(2)
    except click.ClickException as error:
        error.show()
        sys.exit(2)
    except (ValueError, ArithmeticError, RuntimeError) as error:
        click.echo(f"error: {error}", err=True)
        sys.exit(3)
    except OSError as error:
        click.echo(f"io error: {error}", err=True)
        sys.exit(4)


if __name__ == "__main__":
    main()
