"""Common machinery for the built-in mechanisms: actuation vectors and Newton FK."""

from __future__ import annotations

import math
from abc import abstractmethod
from dataclasses import dataclass

import numpy as np

from .. import geom
from ..chain import SerialChain
from ..model import TargetPose
from ..solver import MechanismModel

LINK_TOL = 1e-6


class ActuationError(ValueError):
    """Raised when solved joint positions break the mechanism's link constraints."""


class FKDivergedError(RuntimeError):
    """Newton forward kinematics did not converge; ``last`` holds the final iterate."""

    def __init__(self, message: str, last: TargetPose):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class ActuationVector:
    """Named joint values: radians for angles, millimetres for lengths."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if len(v) != len(self.names):
            raise ValueError(f"{len(v)} values for {len(self.names)} names")
        object.__setattr__(self, "values", v)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def __len__(self):
        return len(self.names)

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}


class Mechanism(MechanismModel):
    """A parallel mechanism with sub-chain decomposition, a closed-form IK baseline and FK."""

    kind: str = ""
    planar: bool = False

    def __init__(self):
        self._chains = self._build_chains()

    @abstractmethod
    def _build_chains(self) -> list[SerialChain]: ...

    def sub_chains(self) -> list[SerialChain]:
        return [c.copy() for c in self._chains]

    def home_configuration(self) -> list[np.ndarray]:
        return [c.positions.copy() for c in self._chains]

    def leaf_positions(self, q) -> np.ndarray:
        return np.vstack([np.asarray(p)[c.leaves] for c, p in zip(self._chains, q)])

    @abstractmethod
    def home_pose(self) -> TargetPose: ...

    @property
    @abstractmethod
    def actuation_names(self) -> tuple[str, ...]: ...

    @abstractmethod
    def geometric_ik(self, pose: TargetPose, slack: float = 0.0) -> ActuationVector | None:
        """Closed-form IK, or ``None`` when the pose is outside the workspace.

        ``slack`` (mm) widens every length bound by that amount and every angular
        bound by the matching arc at the link length.
        """

    @abstractmethod
    def fk_residual(self, pose: TargetPose, actuation: ActuationVector) -> np.ndarray:
        """Loop-closure error of ``pose`` under ``actuation``; zero at the FK solution."""

    def is_feasible(self, pose: TargetPose, slack: float = 0.0) -> bool:
        return self.geometric_ik(pose, slack) is not None

    def solved_pose(self, q) -> TargetPose:
        """Reference-point pose implied by solved leaf positions (rigid best fit)."""
        leaves = self.leaf_positions(q)
        centroid = leaves.mean(axis=0)
        if self.planar:
            return TargetPose(centroid)
        home_leaves = self.sub_targets(self.home_pose()).positions
        return TargetPose(centroid, geom.fit_rotation(home_leaves, leaves))

    def pose_error(self, a: TargetPose, b: TargetPose) -> tuple[float, float]:
        """Position error (mm) and orientation error (deg) between two poses."""
        dp = float(np.linalg.norm(a.position - b.position))
        if self.planar:
            return dp, 0.0
        return dp, math.degrees(geom.rotation_angle(a.rotation() @ b.rotation().T))

    # -- pose parameterisation used by Newton FK -----------------------------------

    @property
    def pose_dim(self) -> int:
        return 2 if self.planar else 6

    def perturb(self, guess: TargetPose, x: np.ndarray) -> TargetPose:
        if self.planar:
            return TargetPose(guess.position + np.array([x[0], x[1], 0.0]))
        R = geom.from_rotation_vector(x[3:6]) @ guess.rotation()
        return TargetPose(guess.position + x[:3], R)

    def _check_lengths(self, q):
        for c, p in zip(self._chains, q):
            p = np.asarray(p, dtype=float)
            if p.shape != c.positions.shape:
                raise ActuationError(f"joint array shape {p.shape} != {c.positions.shape}")
            L = np.linalg.norm(p[1:] - p[list(c.parents[1:])], axis=1)
            H = c.home_lengths[1:]
            for j, (l, h) in enumerate(zip(L, H), start=1):
                link = c.links[j]
                if link is None:
                    if abs(l - h) > LINK_TOL * max(1.0, h):
                        raise ActuationError(f"link into joint {j} has length {l:.9g}, expected {h:.9g}")
                else:
                    lo, hi = link.length_bounds
                    if not lo - LINK_TOL <= l <= hi + LINK_TOL:
                        raise ActuationError(f"prismatic link into joint {j} has length {l:.9g} outside [{lo}, {hi}]")


def fk_newton(mechanism: Mechanism, actuation: ActuationVector, initial_guess: TargetPose,
              tol: float = 1e-10, max_steps: int = 50, step: float = 1e-6,
              info: dict | None = None) -> TargetPose:
    """Forward kinematics by Newton's method on the loop-closure residual.

    The Jacobian is taken by central differences in a local pose parameterisation
    (translation plus rotation vector about the guess). Stops once the residual's
    infinity norm is at most ``tol``.

    Raises:
        FKDivergedError: if ``max_steps`` Newton steps do not reach ``tol``.
    """
    n = mechanism.pose_dim
    x = np.zeros(n)
    pose = mechanism.perturb(initial_guess, x)
    r = mechanism.fk_residual(pose, actuation)
    steps = 0
    while np.max(np.abs(r)) > tol:
        if steps >= max_steps or not np.all(np.isfinite(r)):
            raise FKDivergedError(f"Newton FK did not converge in {steps} steps (|r|={np.max(np.abs(r)):.3g})", pose)
        J = np.empty((len(r), n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = step
            rp = mechanism.fk_residual(mechanism.perturb(initial_guess, x + e), actuation)
            rm = mechanism.fk_residual(mechanism.perturb(initial_guess, x - e), actuation)
            J[:, k] = (rp - rm) / (2.0 * step)
        dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        x = x + dx
        pose = mechanism.perturb(initial_guess, x)
        r = mechanism.fk_residual(pose, actuation)
        steps += 1
    if info is not None:
        info["steps"] = steps
        info["residual"] = float(np.max(np.abs(r)))
    return pose
