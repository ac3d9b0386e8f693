"""Experiment harness: trajectories, the three experiments, reports and the CLI."""

from .config import ConfigError, load_mechanism, load_trajectory
from .experiments import (ExperimentReport, SampleRecord, WorkspaceSamplingError, WorkspaceViolationError,
                          run_efficacy, run_efficiency, run_robustness, sample_targets)
from .report import aggregates_from_rows, read_csv, report_schema, write_report
from .trajectory import TrajectorySpec

__all__ = [
    "ConfigError", "load_mechanism", "load_trajectory", "ExperimentReport", "SampleRecord",
    "WorkspaceSamplingError", "WorkspaceViolationError", "run_efficacy", "run_efficiency",
    "run_robustness", "sample_targets", "aggregates_from_rows", "read_csv", "report_schema",
    "write_report", "TrajectorySpec",
]
