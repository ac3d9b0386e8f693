"""CSV and JSON serialisation of experiment reports."""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

from .experiments import ExperimentReport, SampleRecord, rotation_columns

SIG_DIGITS = 12
FIXED_COLUMNS = (
    "sample_index",
    "target_x", "target_y", "target_z", "target_rx", "target_ry", "target_rz",
    "solved_x", "solved_y", "solved_z", "solved_rx", "solved_ry", "solved_rz",
    "position_error_mm", "orientation_error_deg", "residual_mm",
    "iterations", "time_ms", "atp_applied", "converged",
    "target_feasible", "solved_feasible", "status",
)
TIME_COLUMNS = ("time_ms",)


def fmt(x: float) -> str:
    return f"{float(x):.{SIG_DIGITS}g}"


def _round(x):
    """12 significant digits; non-finite values become JSON null."""
    x = float(x)
    return float(fmt(x)) if math.isfinite(x) else None


def columns(report: ExperimentReport) -> list[str]:
    return list(FIXED_COLUMNS) + [f"q_{n}" for n in report.actuation_names]


def _row(s: SampleRecord, names) -> list[str]:
    return ([str(s.index)]
            + [fmt(v) for v in s.target.position] + [fmt(v) for v in rotation_columns(s.target)]
            + [fmt(v) for v in s.solved.position] + [fmt(v) for v in rotation_columns(s.solved)]
            + [fmt(s.position_error), fmt(s.orientation_error), fmt(s.residual),
               str(s.iterations), fmt(s.time_ms), str(int(s.atp_applied)), str(int(s.converged)),
               str(int(s.target_feasible)), str(int(s.solved_feasible)), s.status]
            + [fmt(s.actuation.get(n, math.nan)) for n in names])


def _json_sample(s: SampleRecord, names) -> dict:
    return {
        "sample_index": s.index,
        "target": {"position": [_round(v) for v in s.target.position],
                   "rotation_vector": [_round(v) for v in rotation_columns(s.target)]},
        "solved": {"position": [_round(v) for v in s.solved.position],
                   "rotation_vector": [_round(v) for v in rotation_columns(s.solved)]},
        "position_error_mm": _round(s.position_error),
        "orientation_error_deg": _round(s.orientation_error),
        "residual_mm": _round(s.residual),
        "iterations": s.iterations,
        "time_ms": _round(s.time_ms),
        "atp_applied": s.atp_applied,
        "converged": s.converged,
        "target_feasible": s.target_feasible,
        "solved_feasible": s.solved_feasible,
        "status": s.status,
        "actuation": {n: _round(s.actuation.get(n, math.nan)) for n in names},
    }


def report_to_dict(report: ExperimentReport) -> dict:
    c = report.config
    return {
        "experiment": report.experiment,
        "mechanism": report.mechanism,
        "solver": report.solver,
        "seed": report.seed,
        "config": {"tolerance_mm": c.tolerance, "max_iter": c.max_iter, "max_atp_rounds": c.max_atp_rounds},
        "trajectory": report.trajectory,
        "actuation_names": list(report.actuation_names),
        "aggregate": {k: (_round(v) if isinstance(v, float) else v) for k, v in report.aggregate().items()},
        "samples": [_json_sample(s, report.actuation_names) for s in report.samples],
    }


def write_report(report: ExperimentReport, format: str, path: str | Path) -> None:
    """Write ``report`` as ``csv`` or ``json``.

    Raises:
        ValueError: unknown format.
        OSError: the file cannot be written; the message names the path.
    """
    if format not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")
    path = Path(path)
    try:
        with open(path, "w", newline="") as f:
            if format == "csv":
                w = csv.writer(f)
                w.writerow(columns(report))
                for s in report.samples:
                    w.writerow(_row(s, report.actuation_names))
            else:
                json.dump(report_to_dict(report), f, indent=1, allow_nan=False)
                f.write("\n")
    except OSError as e:
        raise OSError(e.errno, f"cannot write report to {path}: {e.strerror}") from e


def report_schema() -> dict:
    """The JSON schema that written JSON reports conform to."""
    return json.loads(resources.files("pfabrik").joinpath("data", "report.schema.json").read_text())


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def aggregates_from_rows(rows: list[dict]) -> dict:
    """Recompute RMSE and means from parsed CSV rows."""
    def col(name):
        return [float(r[name]) for r in rows]

    def rmse(v):
        return math.sqrt(sum(x * x for x in v) / len(v)) if v else 0.0

    n = len(rows)
    return {
        "position_rmse_mm": rmse(col("position_error_mm")),
        "orientation_rmse_deg": rmse(col("orientation_error_deg")),
        "mean_iterations": sum(col("iterations")) / n if n else 0.0,
        "mean_time_ms": sum(col("time_ms")) / n if n else 0.0,
    }
