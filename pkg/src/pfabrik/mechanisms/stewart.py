"""6-UPS Stewart platform: six prismatic legs from base universal joints to platform spherical joints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import geom
from ..chain import SerialChain, prismatic, spherical, universal
from ..model import SubTargetSet, TargetPose
from .base import ActuationVector, Mechanism

_Z = np.array([0.0, 0.0, 1.0])


def _ring(radius, angles_deg, z=0.0):
    a = np.radians(np.asarray(angles_deg, dtype=float))
    return np.column_stack([radius * np.cos(a), radius * np.sin(a), np.full(len(a), z)])


def _require_orientation(pose: TargetPose):
    if pose.orientation is None:
        raise ValueError("spatial mechanisms need a target orientation")


@dataclass(frozen=True)
class StewartGeometry:
    """Anchor rings (mm, deg), leg stroke (mm) and cone limits (deg) of a 6-UPS platform.

    The universal-joint cone is measured from +z at each base anchor, the
    spherical-joint cone from the platform's downward normal.
    """

    base_radius: float = 150.0
    platform_radius: float = 100.0
    base_angles: tuple = (-15.0, 15.0, 105.0, 135.0, 225.0, 255.0)
    platform_angles: tuple = (-45.0, 45.0, 75.0, 165.0, 195.0, 285.0)
    home_height: float = 200.0
    leg_bounds: tuple = (160.0, 285.0)
    u_cone: float = 60.0
    s_cone: float = 60.0
    sampling_box: tuple = field(default=((-120.0, -120.0, 100.0), (120.0, 120.0, 320.0)))

    def __post_init__(self):
        if not (self.base_radius > 0 and self.platform_radius > 0):
            raise ValueError("radii must be positive")
        if len(self.base_angles) != 6 or len(self.platform_angles) != 6:
            raise ValueError("a 6-UPS platform needs six base and six platform angles")
        lo, hi = self.leg_bounds
        if not 0 < lo <= hi:
            raise ValueError(f"invalid leg bounds {self.leg_bounds}")
        for name in ("u_cone", "s_cone"):
            if not 0 < getattr(self, name) <= 180:
                raise ValueError(f"{name} must be in (0, 180] deg")
        legs = np.linalg.norm(self.platform_home - self.anchors, axis=1)
        if np.any(legs < lo) or np.any(legs > hi):
            raise ValueError(f"home leg lengths {legs.round(3).tolist()} outside {self.leg_bounds}")

    @property
    def anchors(self) -> np.ndarray:
        return _ring(self.base_radius, self.base_angles)

    @property
    def platform_offsets(self) -> np.ndarray:
        return _ring(self.platform_radius, self.platform_angles)

    @property
    def home_center(self) -> np.ndarray:
        return np.array([0.0, 0.0, float(self.home_height)])

    @property
    def platform_home(self) -> np.ndarray:
        return self.home_center + self.platform_offsets


class Stewart(Mechanism):
    kind = "stewart"

    def __init__(self, geometry: StewartGeometry | None = None):
        self.geometry = geometry or StewartGeometry()
        super().__init__()

    @property
    def actuation_names(self):
        return tuple(f"d{i + 1}" for i in range(6))

    def _build_chains(self):
        g = self.geometry
        lo, hi = g.leg_bounds
        u = universal((0.0, math.radians(g.u_cone)), axis=_Z)
        s = spherical((0.0, math.radians(g.s_cone)))
        leg = prismatic(lo, hi)
        return [SerialChain([a, c], [u, s], links=[None, leg]) for a, c in zip(g.anchors, g.platform_home)]

    def home_pose(self) -> TargetPose:
        return TargetPose(self.geometry.home_center, np.eye(3))

    def sub_targets(self, pose: TargetPose) -> SubTargetSet:
        _require_orientation(pose)
        R = pose.orientation
        T = pose.position + self.geometry.platform_offsets @ R.T
        down = -R[:, 2]
        return SubTargetSet(T, np.tile(down, (6, 1)))

    def leg_lengths(self, pose: TargetPose) -> np.ndarray:
        return np.linalg.norm(self.sub_targets(pose).positions - self.geometry.anchors, axis=1)

    def geometric_ik(self, pose: TargetPose, slack: float = 0.0) -> ActuationVector | None:
        """Leg lengths ``|t_i - A_i|``, or ``None`` if a stroke or joint cone is exceeded."""
        g = self.geometry
        sub = self.sub_targets(pose)
        legs = sub.positions - g.anchors
        d = np.linalg.norm(legs, axis=1)
        lo, hi = g.leg_bounds
        if np.any(d < lo - slack) or np.any(d > hi + slack):
            return None
        tol = slack / d
        u_ang = np.array([geom.angle_between(_Z, v) for v in legs])
        s_ang = np.array([geom.angle_between(sub.axes[0], -v) for v in legs])
        if np.any(u_ang > math.radians(g.u_cone) + tol) or np.any(s_ang > math.radians(g.s_cone) + tol):
            return None
        return ActuationVector(self.actuation_names, d)

    def fk_residual(self, pose: TargetPose, actuation: ActuationVector) -> np.ndarray:
        return self.leg_lengths(pose) - actuation.values

    def extract_actuation(self, q) -> ActuationVector:
        self._check_lengths(q)
        d = [float(np.linalg.norm(np.asarray(p)[1] - np.asarray(p)[0])) for p in q]
        return ActuationVector(self.actuation_names, d)
