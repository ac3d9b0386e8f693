"""Redundant parallel mechanism with three branched sub-chains and six platform struts.

Each sub-chain ``i`` has a base revolute ``A_i`` whose axis is tangent to the
base circle, a prismatic link ``A_i V_i``, a rigid bar ``C_i^1 C_i^2`` centred
on ``V_i`` and two prismatic struts ``C_i^j E_k`` to spherical joints on the
platform. ``V_i`` moves in the vertical plane through ``A_i`` and the base
centre, so the whole sub-chain IK reduces to a 2-D search in that plane.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .. import geom
from ..chain import VIRTUAL, SerialChain, prismatic, revolute, spherical, universal
from ..model import SubTargetSet, TargetPose
from .base import ActuationVector, Mechanism
from .stewart import _require_orientation

FEAS_TOL = 1e-9
_Z = np.array([0.0, 0.0, 1.0])
ACTUATION_GROUPS = ("phi", "d", "l")


@dataclass(frozen=True)
class NrpmGeometry:
    """Dimensions (mm), joint ranges (deg) and home configuration of the mechanism.

    ``phi`` is the elevation of ``A_i V_i`` above the base plane. Platform joints
    ``E_{2i-1}, E_{2i}`` sit at ``chain_angles[i] -/+ pair_half_angle``.
    ``c_cone`` limits the bend at ``C`` relative to the rigid bar direction and
    ``e_cone`` the strut angle from the platform's downward normal; ``None`` means
    unlimited. ``actuated`` names the joint groups reported as actuators.
    """

    base_radius: float = 150.0
    platform_radius: float = 100.0
    chain_angles: tuple = (90.0, 210.0, 330.0)
    pair_half_angle: float = 20.0
    separation: float = 60.0
    phi_bounds: tuple = (70.0, 110.0)
    d_bounds: tuple = (40.0, 80.0)
    strut_bounds: tuple = (50.0, 200.0)
    home_phi: float = 90.0
    home_d: float = 60.0
    home_height: float = 200.0
    c_cone: tuple | None = None
    e_cone: float | None = None
    actuated: tuple = ACTUATION_GROUPS
    sampling_box: tuple = field(default=((-50.0, -50.0, 150.0), (50.0, 50.0, 240.0)))

    def __post_init__(self):
        if not (self.base_radius > 0 and self.platform_radius > 0 and self.separation > 0):
            raise ValueError("radii and separation must be positive")
        if len(self.chain_angles) != 3:
            raise ValueError("the mechanism has exactly three sub-chains")
        lo, hi = self.phi_bounds
        if not 0 <= lo <= hi <= 180:
            raise ValueError(f"invalid phi bounds {self.phi_bounds}")
        for name in ("d_bounds", "strut_bounds"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"invalid {name} {getattr(self, name)}")
        if not self.phi_bounds[0] <= self.home_phi <= self.phi_bounds[1]:
            raise ValueError("home_phi outside phi_bounds")
        if not self.d_bounds[0] <= self.home_d <= self.d_bounds[1]:
            raise ValueError("home_d outside d_bounds")
        unknown = set(self.actuated) - set(ACTUATION_GROUPS)
        if unknown or not self.actuated:
            raise ValueError(f"actuated must be a non-empty subset of {ACTUATION_GROUPS}")
        struts = np.linalg.norm(self.platform_home - self.struts_home_start, axis=1)
        lo, hi = self.strut_bounds
        if np.any(struts < lo) or np.any(struts > hi):
            raise ValueError(f"home strut lengths {struts.round(3).tolist()} outside {self.strut_bounds}")

    def frame(self, i: int):
        """Base point and radial/tangential unit vectors of sub-chain ``i``."""
        g = math.radians(self.chain_angles[i])
        e_r = np.array([math.cos(g), math.sin(g), 0.0])
        e_t = np.array([-math.sin(g), math.cos(g), 0.0])
        return self.base_radius * e_r, e_r, e_t

    def v_point(self, i: int, phi: float, d: float) -> np.ndarray:
        A, e_r, _ = self.frame(i)
        return A + d * (math.cos(phi) * e_r + math.sin(phi) * _Z)

    def c_points(self, i: int, V) -> tuple[np.ndarray, np.ndarray]:
        _, _, e_t = self.frame(i)
        h = 0.5 * self.separation * e_t
        return V - h, V + h

    @property
    def platform_offsets(self) -> np.ndarray:
        out = []
        for g in self.chain_angles:
            for s in (-1.0, 1.0):
                a = math.radians(g + s * self.pair_half_angle)
                out.append([self.platform_radius * math.cos(a), self.platform_radius * math.sin(a), 0.0])
        return np.array(out)

    @property
    def home_center(self) -> np.ndarray:
        return np.array([0.0, 0.0, float(self.home_height)])

    @property
    def platform_home(self) -> np.ndarray:
        return self.home_center + self.platform_offsets

    def home_v(self, i: int) -> np.ndarray:
        return self.v_point(i, math.radians(self.home_phi), self.home_d)

    @property
    def struts_home_start(self) -> np.ndarray:
        return np.vstack([np.vstack(self.c_points(i, self.home_v(i))) for i in range(3)])


def _circle_pairs(c0, r0, c1, r1):
    d = math.hypot(c1[0] - c0[0], c1[1] - c0[1])
    if d == 0 or d > r0 + r1 or d < abs(r0 - r1):
        return []
    a = (r0 * r0 - r1 * r1 + d * d) / (2 * d)
    h = math.sqrt(max(r0 * r0 - a * a, 0.0))
    ex, ey = (c1[0] - c0[0]) / d, (c1[1] - c0[1]) / d
    mx, my = c0[0] + a * ex, c0[1] + a * ey
    return [(mx - h * ey, my + h * ex), (mx + h * ey, my - h * ex)]


def _circle_ray(c, r, ang):
    ux, uy = math.cos(ang), math.sin(ang)
    b = ux * c[0] + uy * c[1]
    disc = b * b - (c[0] ** 2 + c[1] ** 2 - r * r)
    if disc < 0:
        return []
    s = math.sqrt(disc)
    return [(t * ux, t * uy) for t in (b - s, b + s) if t >= 0]


class _PlaneProblem:
    """Feasible set for ``V`` in a sub-chain's vertical plane, coordinates (radial, up) from ``A``."""

    def __init__(self, d_bounds, phi_bounds, strut_rings):
        self.d_bounds = d_bounds
        self.phi_bounds = phi_bounds
        self.rings = strut_rings  # [(center, r_lo, r_hi)]

    def feasible(self, u, v):
        r = math.hypot(u, v)
        lo, hi = self.d_bounds
        if not lo - FEAS_TOL <= r <= hi + FEAS_TOL:
            return False
        phi = math.atan2(v, u)
        if not self.phi_bounds[0] - FEAS_TOL <= phi <= self.phi_bounds[1] + FEAS_TOL:
            return False
        for c, rlo, rhi in self.rings:
            dist = math.hypot(u - c[0], v - c[1])
            if not rlo - FEAS_TOL <= dist <= rhi + FEAS_TOL:
                return False
        return True

    def candidates(self, pref):
        circles = [((0.0, 0.0), self.d_bounds[0]), ((0.0, 0.0), self.d_bounds[1])]
        for c, rlo, rhi in self.rings:
            if rlo > 0:
                circles.append((c, rlo))
            circles.append((c, rhi))
        rays = list(self.phi_bounds)
        pts = [pref]
        for c, r in circles:
            dx, dy = pref[0] - c[0], pref[1] - c[1]
            n = math.hypot(dx, dy)
            if n > 0:
                pts.append((c[0] + r * dx / n, c[1] + r * dy / n))
                pts.append((c[0] - r * dx / n, c[1] - r * dy / n))
        for ang in rays:
            ux, uy = math.cos(ang), math.sin(ang)
            t = max(pref[0] * ux + pref[1] * uy, 0.0)
            pts.append((t * ux, t * uy))
            for c, r in circles:
                pts.extend(_circle_ray(c, r, ang))
        for (c0, r0), (c1, r1) in itertools.combinations(circles, 2):
            pts.extend(_circle_pairs(c0, r0, c1, r1))
        pts.sort(key=lambda p: (p[0] - pref[0]) ** 2 + (p[1] - pref[1]) ** 2)
        return [p for p in pts if self.feasible(*p)]


class Nrpm(Mechanism):
    kind = "nrpm"

    def __init__(self, geometry: NrpmGeometry | None = None):
        self.geometry = geometry or NrpmGeometry()
        super().__init__()

    @property
    def actuation_names(self):
        return (tuple(f"phi{i + 1}" for i in range(3)) + tuple(f"d{i + 1}" for i in range(3))
                + tuple(f"l{i + 1}{j + 1}" for i in range(3) for j in range(2)))

    @property
    def actuated_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.actuation_names if n.rstrip("0123456789") in self.geometry.actuated)

    def _build_chains(self):
        g = self.geometry
        rad = math.radians
        d_link = prismatic(*g.d_bounds)
        strut = prismatic(*g.strut_bounds)
        c_spec = universal(None if g.c_cone is None else (rad(g.c_cone[0]), rad(g.c_cone[1])))
        e_spec = spherical(None if g.e_cone is None else (0.0, rad(g.e_cone)))
        E = g.platform_home
        chains = []
        for i in range(3):
            A, e_r, e_t = g.frame(i)
            V = g.home_v(i)
            C1, C2 = g.c_points(i, V)
            base = revolute((rad(g.phi_bounds[0]), rad(g.phi_bounds[1])), axis=e_r, hinge=e_t)
            chains.append(SerialChain(
                [A, V, C1, C2, E[2 * i], E[2 * i + 1]],
                [base, VIRTUAL, c_spec, c_spec, e_spec, e_spec],
                parents=[-1, 0, 1, 1, 2, 3],
                links=[None, d_link, None, None, strut, strut],
            ))
        return chains

    def home_pose(self) -> TargetPose:
        return TargetPose(self.geometry.home_center, np.eye(3))

    def sub_targets(self, pose: TargetPose) -> SubTargetSet:
        _require_orientation(pose)
        R = pose.orientation
        T = pose.position + self.geometry.platform_offsets @ R.T
        axes = np.tile(-R[:, 2], (6, 1)) if self.geometry.e_cone is not None else None
        return SubTargetSet(T, axes)

    def _cones_ok(self, V, Cs, Es, down, slack):
        g = self.geometry
        for C, E, sign in zip(Cs, Es, (-1.0, 1.0)):
            strut = E - C
            n = float(np.linalg.norm(strut))
            tol = slack / n if n > 0 else 0.0
            if g.c_cone is not None:
                a = geom.angle_between(C - V, strut)
                lo, hi = math.radians(g.c_cone[0]), math.radians(g.c_cone[1])
                if not lo - tol - FEAS_TOL <= a <= hi + tol + FEAS_TOL:
                    return False
            if g.e_cone is not None:
                a = geom.angle_between(down, -strut)
                if a > math.radians(g.e_cone) + tol + FEAS_TOL:
                    return False
        return True

    def chain_ik(self, i: int, targets, down, slack: float = 0.0):
        """Closest feasible ``(phi, d)`` to the home configuration reaching both ``targets``."""
        g = self.geometry
        A, e_r, e_t = g.frame(i)
        h = 0.5 * g.separation
        lo, hi = g.strut_bounds
        lo, hi = lo - slack, hi + slack
        rings = []
        for E, s in zip(targets, (-1.0, 1.0)):
            Q = E - A - s * h * e_t
            qt = float(Q @ e_t)
            if hi * hi < qt * qt:
                return None
            rlo = math.sqrt(max(lo * lo - qt * qt, 0.0)) if lo > 0 else 0.0
            rings.append(((float(Q @ e_r), float(Q[2])), rlo, math.sqrt(hi * hi - qt * qt)))
        d_lo, d_hi = g.d_bounds
        dphi = slack / d_hi
        plane = _PlaneProblem((d_lo - slack, d_hi + slack),
                              (math.radians(g.phi_bounds[0]) - dphi, math.radians(g.phi_bounds[1]) + dphi), rings)
        Vh = g.home_v(i) - A
        for u, v in plane.candidates((float(Vh @ e_r), float(Vh[2]))):
            V = A + u * e_r + v * _Z
            Cs = g.c_points(i, V)
            if self._cones_ok(V, Cs, targets, down, slack):
                return math.atan2(v, u), math.hypot(u, v), Cs
        return None

    def geometric_ik(self, pose: TargetPose, slack: float = 0.0) -> ActuationVector | None:
        """Per sub-chain, pick the feasible ``V_i`` nearest its home position.

        Feasible ``V_i`` form a planar region bounded by circles (prismatic
        strokes, strut rings) and rays (elevation limits). The nearest point
        is either the home point itself or lies on the region's boundary, so
        it is found among projections onto and intersections of those curves.
        """
        sub = self.sub_targets(pose)
        T = sub.positions
        down = -pose.rotation()[:, 2]
        phi, d, l = [], [], []
        for i in range(3):
            res = self.chain_ik(i, T[2 * i:2 * i + 2], down, slack)
            if res is None:
                return None
            p, dd, Cs = res
            phi.append(p)
            d.append(dd)
            l.extend(float(np.linalg.norm(E - C)) for E, C in zip(T[2 * i:2 * i + 2], Cs))
        return ActuationVector(self.actuation_names, phi + d + l)

    def strut_starts(self, actuation: ActuationVector) -> np.ndarray:
        g = self.geometry
        out = []
        for i in range(3):
            V = g.v_point(i, actuation[f"phi{i + 1}"], actuation[f"d{i + 1}"])
            out.extend(g.c_points(i, V))
        return np.array(out)

    def fk_residual(self, pose: TargetPose, actuation: ActuationVector) -> np.ndarray:
        T = self.sub_targets(pose).positions
        lengths = np.linalg.norm(T - self.strut_starts(actuation), axis=1)
        return lengths - actuation.values[6:]

    def extract_actuation(self, q) -> ActuationVector:
        self._check_lengths(q)
        g = self.geometry
        phi, d, l = [], [], []
        for i, p in enumerate(q):
            p = np.asarray(p)
            A, e_r, _ = g.frame(i)
            w = p[1] - A
            phi.append(math.atan2(float(w @ _Z), float(w @ e_r)))
            d.append(float(np.linalg.norm(w)))
            l.extend(float(np.linalg.norm(p[k] - p[k - 2])) for k in (4, 5))
        return ActuationVector(self.actuation_names, phi + d + l)
