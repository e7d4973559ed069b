"""Deterministic persistence: report JSON, trace CSV, and aggregate CSV.

All real numbers are written with 17 significant digits so every file
round-trips bit-exactly; nothing time- or host-dependent is ever written.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from ..optim import TrainTrace
from .runner import ComparisonResult, ExperimentReport, SweepResult

SCHEMA_VERSION = 1

TRACE_COLUMNS = (
    "step",
    "minibatch_loss",
    "full_loss_if_logged",
    "grad_norm",
    "event_kind",
)

AGGREGATE_COLUMNS = (
    "n_seeds",
    "mean_final_loss",
    "std_final_loss",
    "mean_accuracy_percent",
    "std_accuracy_percent",
    "mean_final_gradient_norm",
    "std_final_gradient_norm",
    "mean_reversal_count",
)


def fmt(value) -> str:
    """Fixed textual form: 17 significant digits for reals, str otherwise."""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def report_to_dict(report: ExperimentReport) -> dict:
    """The persisted view of a report: everything except wall time."""
    return {
        "schema_version": SCHEMA_VERSION,
        "config": dict(report.config),
        "final_loss": report.final_loss,
        "final_gradient_norm": report.final_gradient_norm,
        "accuracy_percent": report.accuracy_percent,
        "reversal_count": report.reversal_count,
        "final_parameters": list(report.final_parameters),
        "trace_file": "trace.csv",
    }


def write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_json(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def write_trace_csv(trace: TrainTrace, path: Path) -> None:
    """One row per step; full_loss_if_logged is empty on unlogged steps.

    minibatch_loss is the mean over that step's mini-batch;
    full_loss_if_logged is the mean over the whole training set.
    """
    logged = dict(trace.full_losses)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for t, event in enumerate(trace.events):
            writer.writerow(
                [
                    t,
                    fmt(float(trace.losses[t])),
                    fmt(logged[t]) if t in logged else "",
                    fmt(float(trace.grad_norms[t])),
                    event.kind,
                ]
            )


def write_rows_csv(rows: list[dict], columns, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in columns])


def persist_report(report: ExperimentReport, out_dir: Path) -> Path:
    """Write report.json + trace.csv; returns the report path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(report.trace, out_dir / "trace.csv")
    path = out_dir / "report.json"
    write_json(report_to_dict(report), path)
    return path


def persist_sweep(result: SweepResult, out_dir: Path) -> Path:
    """Per-(value, seed) run dirs plus sweep.csv and sweep.json aggregates."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for value, cell in zip(result.values, result.reports):
        for report in cell:
            tag = f"{result.parameter}={value}-seed={report.config['seed']}"
            persist_report(report, out_dir / tag)
    rows = result.aggregate_rows()
    write_rows_csv(rows, ("value",) + AGGREGATE_COLUMNS, out_dir / "sweep.csv")
    write_json(
        {
            "schema_version": SCHEMA_VERSION,
            "parameter": result.parameter,
            "values": list(result.values),
            "n_seeds": result.n_seeds,
            "rows": rows,
        },
        out_dir / "sweep.json",
    )
    return out_dir / "sweep.csv"


def persist_comparison(result: ComparisonResult, out_dir: Path) -> Path:
    """Per-(optimizer, seed) run dirs plus compare.csv and compare.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, cell in zip(result.optimizers, result.reports):
        for report in cell:
            tag = f"opt={name}-seed={report.config['seed']}"
            persist_report(report, out_dir / tag)
    rows = result.aggregate_rows()
    write_rows_csv(rows, ("optimizer",) + AGGREGATE_COLUMNS, out_dir / "compare.csv")
    write_json(
        {
            "schema_version": SCHEMA_VERSION,
            "optimizers": list(result.optimizers),
            "n_seeds": result.n_seeds,
            "rows": rows,
        },
        out_dir / "compare.json",
    )
    return out_dir / "compare.csv"


def report_csv_rows(payload: dict) -> list[list[str]]:
    """Flatten a report dict to key,value rows (stable order, scalar fields)."""
    rows = []
    for key in (
        "final_loss",
        "final_gradient_norm",
        "accuracy_percent",
        "reversal_count",
    ):
        rows.append([key, fmt(payload[key])])
    for key, value in sorted(payload["config"].items()):
        rows.append([f"config.{key}", fmt(value)])
    return rows
