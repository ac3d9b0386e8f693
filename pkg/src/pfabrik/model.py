"""Value types shared by the chain solver, the parallel solver and the mechanisms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import vec3

ROTATION_TOL = 1e-9


class InvalidConfigError(ValueError):
    """Raised for solver settings outside their valid range."""


@dataclass(frozen=True)
class SolverConfig:
    """Termination settings.

    Attributes:
        tolerance: leaf-to-target distance ``E`` (mm) below which a leaf counts as reached.
        max_iter: iteration budget ``K`` per round; a fresh budget starts after each target projection.
        max_atp_rounds: how many times an unreachable target may be projected back
            toward the workspace before the solve gives up.
    """

    tolerance: float = 1e-2
    max_iter: int = 100
    max_atp_rounds: int = 50

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidConfigError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iter < 1:
            raise InvalidConfigError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.max_atp_rounds < 0:
            raise InvalidConfigError(f"max_atp_rounds must be non-negative, got {self.max_atp_rounds}")


@dataclass(frozen=True)
class TargetPose:
    """Desired position (mm) and optional orientation of a mechanism's reference point."""

    position: np.ndarray
    orientation: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        if self.orientation is not None:
            R = np.array(self.orientation, dtype=float)
            if R.shape != (3, 3):
                raise ValueError(f"orientation must be 3x3, got {R.shape}")
            if not np.allclose(R.T @ R, np.eye(3), atol=ROTATION_TOL) or abs(np.linalg.det(R) - 1.0) > ROTATION_TOL:
                raise ValueError("orientation is not a proper rotation")
            object.__setattr__(self, "orientation", R)

    def rotation(self) -> np.ndarray:
        return np.eye(3) if self.orientation is None else self.orientation


@dataclass(frozen=True)
class SubTargetSet:
    """Per-leaf target positions, in leaf order across all sub-chains.

    ``axes`` holds optional per-leaf reference directions for angular limits at
    the leaf joints; a zero row means no reference.
    """

    positions: np.ndarray
    axes: np.ndarray | None = None

    def __post_init__(self):
        P = np.array(self.positions, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "positions", P)
        A = np.zeros_like(P) if self.axes is None else np.array(self.axes, dtype=float).reshape(-1, 3)
        if A.shape != P.shape:
            raise ValueError("axes must match positions")
        object.__setattr__(self, "axes", A)

    def __len__(self):
        return len(self.positions)


@dataclass
class SolveOutcome:
    """Result of a chain or mechanism solve.

    ``iterations`` counts full forward+backward sweeps over all sub-chains, summed
    over projection rounds. ``residuals`` are leaf distances to the final (possibly
    revised) sub-targets after the last backward pass.
    """

    converged: bool
    iterations: int
    residuals: np.ndarray
    joint_positions: list[np.ndarray]
    atp_applied: bool = False
    revised_target: np.ndarray | None = None
    atp_rounds: int = 0
    reachable: bool = True
    sub_targets: np.ndarray | None = field(default=None, repr=False)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0
