"""The three experiments: trajectory efficacy with FK verification, random-target
efficiency against the closed-form baseline, and out-of-workspace robustness."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import geom
from ..mechanisms import FKDivergedError, Mechanism, fk_newton
from ..model import SolverConfig, TargetPose
from ..solver import solve
from .trajectory import TrajectorySpec

MAX_REJECTIONS = 1_000_000


class WorkspaceViolationError(ValueError):
    """A trajectory that must stay in the workspace leaves it."""

    def __init__(self, index: int, position):
        self.index = index
        super().__init__(f"trajectory sample {index} at {np.round(position, 6).tolist()} is outside the workspace")


class WorkspaceSamplingError(RuntimeError):
    """Too many rejected samples while drawing random in-workspace targets."""


@dataclass
class SampleRecord:
    index: int
    target: TargetPose
    solved: TargetPose
    position_error: float
    orientation_error: float
    residual: float
    iterations: int
    time_ms: float
    atp_applied: bool
    converged: bool
    status: str = "ok"
    target_feasible: bool = True
    solved_feasible: bool = True
    actuation: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    experiment: str
    mechanism: str
    solver: str
    config: SolverConfig
    samples: list[SampleRecord]
    seed: int | None = None
    trajectory: dict | None = None
    actuation_names: tuple = ()

    @property
    def position_rmse(self) -> float:
        return _rmse([s.position_error for s in self.samples])

    @property
    def orientation_rmse(self) -> float:
        return _rmse([s.orientation_error for s in self.samples])

    @property
    def mean_iterations(self) -> float:
        return _mean([s.iterations for s in self.samples])

    @property
    def mean_time_ms(self) -> float:
        return _mean([s.time_ms for s in self.samples])

    @property
    def converged_fraction(self) -> float:
        return _mean([float(s.converged) for s in self.samples])

    @property
    def atp_count(self) -> int:
        return sum(s.atp_applied for s in self.samples)

    def aggregate(self) -> dict:
        return {
            "position_rmse_mm": self.position_rmse,
            "orientation_rmse_deg": self.orientation_rmse,
            "mean_iterations": self.mean_iterations,
            "mean_time_ms": self.mean_time_ms,
            "converged_fraction": self.converged_fraction,
            "atp_count": self.atp_count,
            "sample_count": len(self.samples),
        }


def _rmse(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(math.sqrt(np.mean(v * v))) if v.size else 0.0


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else 0.0


def _safe_actuation(mechanism: Mechanism, q) -> dict:
    try:
        return mechanism.extract_actuation(q).as_dict()
    except ValueError:
        return {n: math.nan for n in mechanism.actuation_names}


def _timed_solve(mechanism, target, config, initial):
    t0 = time.perf_counter()
    out = solve(mechanism, target, config, initial=initial)
    return out, (time.perf_counter() - t0) * 1e3


def run_efficacy(mechanism: Mechanism, trajectory: TrajectorySpec,
                 config: SolverConfig | None = None) -> ExperimentReport:
    """Track ``trajectory`` and verify each IK solution by Newton FK.

    The FK guess for sample ``k`` is target ``k-1`` (sample 0 uses its own
    target). Each solve warm-starts from the previous solution.

    Raises:
        WorkspaceViolationError: if any sample is outside the workspace.
    """
    config = config or SolverConfig()
    poses = trajectory.poses(mechanism.planar)
    for k, t in enumerate(poses):
        if not mechanism.is_feasible(t):
            raise WorkspaceViolationError(k, t.position)
    rows = []
    q = None
    for k, t in enumerate(poses):
        out, ms = _timed_solve(mechanism, t, config, q)
        q = out.joint_positions
        guess = poses[k - 1] if k else t
        status = "ok" if out.converged else "not_converged"
        actuation = _safe_actuation(mechanism, q)
        try:
            fk = fk_newton(mechanism, mechanism.extract_actuation(q), guess)
        except FKDivergedError as e:
            fk, status = e.last, "fk_diverged"
        except ValueError:
            fk, status = mechanism.solved_pose(q), "invalid_actuation"
        dp, dr = mechanism.pose_error(fk, t)
        rows.append(SampleRecord(k, t, fk, dp, dr, out.max_residual, out.iterations, ms,
                                 out.atp_applied, out.converged, status, actuation=actuation))
    return ExperimentReport("efficacy", mechanism.kind, "p-fabrik", config, rows,
                            trajectory=trajectory.as_dict(), actuation_names=mechanism.actuation_names)


def sample_targets(mechanism: Mechanism, n_targets: int, seed: int) -> list[TargetPose]:
    """Uniform positions in the mechanism's sampling box that pass geometric-IK feasibility.

    Spatial targets keep the platform level.
    """
    if n_targets < 1:
        raise ValueError(f"n_targets must be at least 1, got {n_targets}")
    rng = np.random.default_rng(seed)
    lo, hi = (np.asarray(b, dtype=float) for b in mechanism.geometry.sampling_box)
    R = None if mechanism.planar else np.eye(3)
    out, rejected = [], 0
    while len(out) < n_targets:
        t = TargetPose(rng.uniform(lo, hi), R)
        if mechanism.is_feasible(t):
            out.append(t)
        else:
            rejected += 1
            if rejected >= MAX_REJECTIONS:
                raise WorkspaceSamplingError(
                    f"{rejected} rejected samples after {len(out)} accepted; check the sampling box")
    return out


def run_efficiency(mechanism: Mechanism, n_targets: int, seed: int,
                   config: SolverConfig | None = None) -> tuple[ExperimentReport, ExperimentReport]:
    """Solve random in-workspace targets from the home configuration with both solvers.

    Only the solve call is timed. The closed-form baseline counts as one iteration.
    """
    config = config or SolverConfig()
    targets = sample_targets(mechanism, n_targets, seed)
    fab, geo = [], []
    for k, t in enumerate(targets):
        out, ms = _timed_solve(mechanism, t, config, None)
        solved = mechanism.solved_pose(out.joint_positions)
        dp, dr = mechanism.pose_error(solved, t)
        fab.append(SampleRecord(k, t, solved, dp, dr, out.max_residual, out.iterations, ms,
                                out.atp_applied, out.converged,
                                "ok" if out.converged else "not_converged",
                                actuation=_safe_actuation(mechanism, out.joint_positions)))

        t0 = time.perf_counter()
        ik = mechanism.geometric_ik(t)
        ms = (time.perf_counter() - t0) * 1e3
        status = "ok"
        try:
            check = fk_newton(mechanism, ik, t)
        except FKDivergedError as e:
            check, status = e.last, "fk_diverged"
        dp, dr = mechanism.pose_error(check, t)
        geo.append(SampleRecord(k, t, check, dp, dr, dp, 1, ms, False, True, status,
                                actuation=ik.as_dict()))
    common = dict(config=config, seed=seed, actuation_names=mechanism.actuation_names)
    return (ExperimentReport("efficiency", mechanism.kind, "p-fabrik", samples=fab, **common),
            ExperimentReport("efficiency", mechanism.kind, "geometric", samples=geo, **common))


def run_robustness(mechanism: Mechanism, trajectory: TrajectorySpec,
                   config: SolverConfig | None = None) -> ExperimentReport:
    """Track a trajectory that may leave the workspace; every sample yields a row.

    The solved pose is the rigid fit of the solved end effectors; its
    feasibility is checked by geometric IK with bounds relaxed by the tolerance.
    """
    config = config or SolverConfig()
    rows = []
    q = None
    for k, t in enumerate(trajectory.poses(mechanism.planar)):
        try:
            feasible = mechanism.is_feasible(t)
            out, ms = _timed_solve(mechanism, t, config, q)
            q = out.joint_positions
            solved = mechanism.solved_pose(q)
            dp, dr = mechanism.pose_error(solved, t)
            ok = bool(np.all(np.isfinite(np.vstack(q))))
            rows.append(SampleRecord(
                k, t, solved, dp, dr, out.max_residual, out.iterations, ms, out.atp_applied, out.converged,
                ("ok" if out.converged else "not_converged") if ok else "non_finite",
                target_feasible=feasible,
                solved_feasible=mechanism.is_feasible(solved, config.tolerance),
                actuation=_safe_actuation(mechanism, q)))
        except Exception as e:  # totality: a failed sample becomes a row, never a crash
            nan = TargetPose(np.full(3, math.nan))
            rows.append(SampleRecord(k, t, nan, math.nan, math.nan, math.nan, 0, 0.0, False, False,
                                     f"error: {type(e).__name__}: {e}", target_feasible=False,
                                     solved_feasible=False,
                                     actuation={n: math.nan for n in mechanism.actuation_names}))
            q = None
    return ExperimentReport("robustness", mechanism.kind, "p-fabrik", config, rows,
                            trajectory=trajectory.as_dict(), actuation_names=mechanism.actuation_names)


def rotation_columns(pose: TargetPose) -> list[float]:
    """Orientation as a rotation vector (rad); zeros for position-only poses."""
    if pose.orientation is None:
        return [0.0, 0.0, 0.0]
    return geom.rotation_vector(pose.orientation).tolist()
