"""Planar five-bar linkage with two actuated base revolutes.

The mechanism lies in the z = 0 plane. Sub-chain 1 is ``p1 -> p2 -> p3`` and
sub-chain 2 is ``p5 -> p4 -> p3``; the shared end-effector is modelled as two
leaves whose midpoint is the solved end-effector position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import geom
from ..chain import SerialChain, revolute
from ..model import SubTargetSet, TargetPose
from .base import ActuationVector, Mechanism

PLANAR_TOL = 1e-9
_UP = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


def _deg_pair(b):
    return tuple(math.radians(float(x)) for x in b)


@dataclass(frozen=True)
class FiveBarGeometry:
    """Dimensions (mm) and joint bounds (deg) of a planar five-bar.

    ``base_bounds`` limit the angle of each proximal link from +y; ``elbow_bounds``
    limit the bend between proximal and distal link (0 is fully stretched).
    """

    base_left: tuple = (-50.0, 0.0)
    base_right: tuple = (50.0, 0.0)
    r1: float = 120.0
    r2: float = 160.0
    r3: float = 160.0
    r4: float = 120.0
    base_bounds: tuple = (0.0, 70.0)
    elbow_bounds: tuple = (50.0, 130.0)
    home_target: tuple = (0.0, 150.0)
    sampling_box: tuple = field(default=((-300.0, -300.0, 0.0), (300.0, 300.0, 0.0)))

    def __post_init__(self):
        for name in ("r1", "r2", "r3", "r4"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("base_left", "base_right", "home_target"):
            v = geom.vec3(getattr(self, name))
            if abs(v[2]) > PLANAR_TOL:
                raise ValueError(f"{name} must lie in the z = 0 plane")
        if np.linalg.norm(self.p1 - self.p5) == 0:
            raise ValueError("base joints coincide")
        for name in ("base_bounds", "elbow_bounds"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi <= 180:
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi <= 180 deg")

    @property
    def p1(self) -> np.ndarray:
        return geom.vec3(self.base_left)

    @property
    def p5(self) -> np.ndarray:
        return geom.vec3(self.base_right)

    @property
    def r5(self) -> float:
        return float(np.linalg.norm(self.p5 - self.p1))


def _circle_intersection(c0, r0, c1, r1, side, slack=0.0):
    """Intersection of two circles in the xy plane on the ``side`` (+1 CCW, -1 CW) of c0->c1."""
    v = c1 - c0
    d = float(np.hypot(v[0], v[1]))
    if d == 0 or d > r0 + r1 + slack or d < abs(r0 - r1) - slack:
        return None
    a = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d)
    h = math.sqrt(max(r0 * r0 - a * a, 0.0))
    e = v / d
    n = np.array([-e[1], e[0], 0.0])
    return c0 + a * e + side * h * n


class FiveBar(Mechanism):
    kind = "five_bar"
    planar = True

    def __init__(self, geometry: FiveBarGeometry | None = None):
        self.geometry = geometry or FiveBarGeometry()
        home = geom.vec3(self.geometry.home_target)
        self._home_elbows = self._elbows(home)
        if self._home_elbows is None or self.geometric_ik(TargetPose(home)) is None:
            raise ValueError(f"home target {home.tolist()} is outside the workspace")
        super().__init__()

    @property
    def actuation_names(self):
        return ("theta1", "theta5")

    def _elbows(self, t, slack=0.0):
        g = self.geometry
        p2 = _circle_intersection(g.p1, g.r1, t, g.r2, +1, slack)
        p4 = _circle_intersection(g.p5, g.r4, t, g.r3, -1, slack)
        if p2 is None or p4 is None:
            return None
        return p2, p4

    def _build_chains(self):
        g = self.geometry
        p3 = geom.vec3(g.home_target)
        p2, p4 = self._home_elbows
        base = revolute(_deg_pair(g.base_bounds), axis=_UP, hinge=_Z)
        lo, hi = _deg_pair(g.elbow_bounds)
        # elbow-out: the left arm turns clockwise at its elbow, the right arm counter-clockwise;
        # signed limits keep each arm on that branch
        left = revolute((-hi, -lo), hinge=_Z, signed=True)
        right = revolute((lo, hi), hinge=_Z, signed=True)
        return [
            SerialChain([g.p1, p2, p3], [base, left, revolute()]),
            SerialChain([g.p5, p4, p3], [base, right, revolute()]),
        ]

    def home_pose(self) -> TargetPose:
        return TargetPose(geom.vec3(self.geometry.home_target))

    def sub_targets(self, pose: TargetPose) -> SubTargetSet:
        t = pose.position
        if abs(t[2]) > PLANAR_TOL:
            raise ValueError(f"five-bar targets must lie in the z = 0 plane, got z = {t[2]}")
        return SubTargetSet(np.vstack([t, t]))

    def geometric_ik(self, pose: TargetPose, slack: float = 0.0) -> ActuationVector | None:
        """Elbow-out two-circle construction: left elbow CCW of p1->t, right elbow CW of p5->t."""
        g = self.geometry
        t = geom.vec3(pose.position)
        if abs(t[2]) > PLANAR_TOL + slack:
            return None
        el = self._elbows(t, slack)
        if el is None:
            return None
        p2, p4 = el
        (b_lo, b_hi), (e_lo, e_hi) = _deg_pair(g.base_bounds), _deg_pair(g.elbow_bounds)
        for base, elbow, r_base, r_tip in ((g.p1, p2, g.r1, g.r2), (g.p5, p4, g.r4, g.r3)):
            link = elbow - base
            b = geom.angle_between(_UP, link)
            if not b_lo - slack / r_base <= b <= b_hi + slack / r_base:
                return None
            tip = t - elbow
            if np.linalg.norm(tip) > 0:
                e = geom.angle_between(link, tip)
                if not e_lo - slack / r_tip <= e <= e_hi + slack / r_tip:
                    return None
        th1 = math.atan2(p2[1] - g.p1[1], p2[0] - g.p1[0])
        th5 = math.atan2(p4[1] - g.p5[1], p4[0] - g.p5[0])
        return ActuationVector(self.actuation_names, [th1, th5])

    def elbows_from_actuation(self, actuation: ActuationVector):
        g = self.geometry
        th1, th5 = actuation["theta1"], actuation["theta5"]
        p2 = g.p1 + g.r1 * np.array([math.cos(th1), math.sin(th1), 0.0])
        p4 = g.p5 + g.r4 * np.array([math.cos(th5), math.sin(th5), 0.0])
        return p2, p4

    def forward_closed_form(self, actuation: ActuationVector) -> TargetPose | None:
        """End-effector from two-circle intersection on the CCW side of p2->p4."""
        g = self.geometry
        p2, p4 = self.elbows_from_actuation(actuation)
        p3 = _circle_intersection(p2, g.r2, p4, g.r3, +1)
        return None if p3 is None else TargetPose(p3)

    def fk_residual(self, pose: TargetPose, actuation: ActuationVector) -> np.ndarray:
        g = self.geometry
        p2, p4 = self.elbows_from_actuation(actuation)
        p3 = pose.position
        return np.array([np.linalg.norm(p3 - p2) - g.r2, np.linalg.norm(p3 - p4) - g.r3])

    def extract_actuation(self, q) -> ActuationVector:
        self._check_lengths(q)
        (a, b), (c, d) = (np.asarray(q[0])[:2], np.asarray(q[1])[:2])
        th1 = math.atan2(b[1] - a[1], b[0] - a[0])
        th5 = math.atan2(d[1] - c[1], d[0] - c[0])
        return ActuationVector(self.actuation_names, [th1, th5])
