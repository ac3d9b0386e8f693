"""Serial and tree kinematic chains with FABRIK reaching passes.

A chain is a rooted tree of joint positions stored in topological order. The
link into joint ``j`` is either fixed-length, prismatic (a variable length
within bounds), or a rigid offset when the parent is a virtual joint. A plain
serial chain is the special case ``parent[j] == j - 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import geom
from ._backend import reach
from .model import SolveOutcome, SolverConfig


class ChainError(ValueError):
    """Raised for malformed chains or mismatched reaching inputs."""


class JointKind(enum.Enum):
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"
    UNIVERSAL = "universal"
    SPHERICAL = "spherical"
    FIXED_VIRTUAL = "fixed_virtual"


ROTATIONAL = (JointKind.REVOLUTE, JointKind.UNIVERSAL, JointKind.SPHERICAL)


@dataclass(frozen=True)
class JointSpec:
    """Joint type and limits.

    ``angle_bounds`` is a cone ``(lo, hi)`` in radians on the angle between the
    incoming link (or ``axis`` for a root) and the outgoing link. ``hinge`` pins
    a root revolute joint's outgoing link to the plane normal to the hinge axis.
    A ``signed`` revolute joint instead bounds the turn about ``hinge``, positive
    counter-clockwise, with ``-pi <= lo <= hi <= pi``; this fixes the bending side.
    Prismatic specs describe links and carry ``length_bounds`` in mm.
    """

    kind: JointKind
    length_bounds: tuple[float, float] | None = None
    angle_bounds: tuple[float, float] | None = None
    axis: tuple[float, float, float] | None = None
    hinge: tuple[float, float, float] | None = None
    signed: bool = False

    def __post_init__(self):
        if self.kind is JointKind.PRISMATIC:
            if self.length_bounds is None:
                raise ChainError("prismatic joints need length_bounds")
            lo, hi = self.length_bounds
            if not 0 <= lo <= hi:
                raise ChainError(f"invalid length bounds {self.length_bounds}")
        elif self.length_bounds is not None:
            raise ChainError(f"{self.kind.value} joints do not take length_bounds")
        if self.angle_bounds is not None:
            if self.kind not in ROTATIONAL:
                raise ChainError(f"{self.kind.value} joints do not take angle_bounds")
            lo, hi = self.angle_bounds
            floor = -np.pi if self.signed else 0.0
            if not floor <= lo <= hi <= np.pi:
                raise ChainError(f"invalid angle bounds {self.angle_bounds}")
        if self.signed and (self.kind is not JointKind.REVOLUTE or self.hinge is None or self.angle_bounds is None):
            raise ChainError("signed limits need a revolute joint with a hinge and angle bounds")
        for name in ("axis", "hinge"):
            v = getattr(self, name)
            if v is not None:
                u = geom.normalize(v)
                object.__setattr__(self, name, tuple(float(x) for x in u))


def revolute(angle_bounds=None, axis=None, hinge=None, signed=False) -> JointSpec:
    return JointSpec(JointKind.REVOLUTE, angle_bounds=angle_bounds, axis=axis, hinge=hinge, signed=signed)


def universal(angle_bounds=None, axis=None) -> JointSpec:
    return JointSpec(JointKind.UNIVERSAL, angle_bounds=angle_bounds, axis=axis)


def spherical(angle_bounds=None) -> JointSpec:
    return JointSpec(JointKind.SPHERICAL, angle_bounds=angle_bounds)


def prismatic(lo: float, hi: float) -> JointSpec:
    return JointSpec(JointKind.PRISMATIC, length_bounds=(float(lo), float(hi)))


VIRTUAL = JointSpec(JointKind.FIXED_VIRTUAL)


class ReachReport(NamedTuple):
    moved_joint_count: int
    limit_clamps_applied: int


class PrismaticCheck(NamedTuple):
    within: bool
    length: float


class SerialChain:
    """Joint positions plus the immutable structure needed to reach with them.

    Args:
        positions: ``(n, 3)`` joint positions; they also define the home
            configuration (fixed link lengths, rigid offsets, fallback directions).
        specs: one :class:`JointSpec` per positional joint.
        parents: parent index per joint, ``-1`` for the root; defaults to a serial chain.
        links: optional prismatic :class:`JointSpec` per joint for the link into it
            (``None`` entries are fixed-length links).
    """

    def __init__(self, positions, specs: Sequence[JointSpec], parents: Sequence[int] | None = None,
                 links: Sequence[JointSpec | None] | None = None):
        P = np.array(positions, dtype=float)
        if P.ndim != 2 or P.shape[1] not in (2, 3):
            raise ChainError(f"positions must be (n, 3), got {P.shape}")
        if P.shape[1] == 2:
            P = np.column_stack([P, np.zeros(len(P))])
        n = len(P)
        if n < 2:
            raise ChainError("a chain needs at least two joints")
        if len(specs) != n:
            raise ChainError(f"{len(specs)} specs for {n} joints")
        parents = list(range(-1, n - 1)) if parents is None else [int(p) for p in parents]
        if len(parents) != n or parents[0] != -1 or any(not 0 <= parents[j] < j for j in range(1, n)):
            raise ChainError("parents must be topologically ordered with the root at index 0")
        links = [None] * n if links is None else list(links)
        if len(links) != n or links[0] is not None:
            raise ChainError("links must have one entry per joint and none for the root")
        for j, link in enumerate(links):
            if link is not None and link.kind is not JointKind.PRISMATIC:
                raise ChainError(f"link into joint {j} must be prismatic or None")
            if link is not None and specs[parents[j]].kind is JointKind.FIXED_VIRTUAL:
                raise ChainError(f"link into joint {j} is a rigid offset and cannot be prismatic")
        self._specs = tuple(specs)
        self._parents = tuple(parents)
        self._links = tuple(links)
        self._home = P.copy()
        self._home.setflags(write=False)
        self.positions = np.ascontiguousarray(P)
        self._kernel = None

    # -- structure ---------------------------------------------------------------

    @property
    def specs(self) -> tuple[JointSpec, ...]:
        return self._specs

    @property
    def parents(self) -> tuple[int, ...]:
        return self._parents

    @property
    def links(self) -> tuple[JointSpec | None, ...]:
        return self._links

    @property
    def home(self) -> np.ndarray:
        return self._home

    @property
    def base(self) -> np.ndarray:
        return self._home[0].copy()

    def __len__(self):
        return len(self._specs)

    @property
    def children(self) -> list[list[int]]:
        kids = [[] for _ in self._specs]
        for j, p in enumerate(self._parents[1:], start=1):
            kids[p].append(j)
        return kids

    @property
    def leaves(self) -> list[int]:
        return [j for j, k in enumerate(self.children) if not k]

    @property
    def is_tree(self) -> bool:
        return any(len(k) > 1 for k in self.children)

    def is_rigid(self, j: int) -> bool:
        return j > 0 and self._specs[self._parents[j]].kind is JointKind.FIXED_VIRTUAL

    @property
    def home_lengths(self) -> np.ndarray:
        """Home length of the link into each joint (0 for the root)."""
        out = np.zeros(len(self))
        for j in range(1, len(self)):
            out[j] = np.linalg.norm(self._home[j] - self._home[self._parents[j]])
        return out

    def link_lengths(self) -> np.ndarray:
        """Current length of the link into each joint (0 for the root)."""
        out = np.zeros(len(self))
        for j in range(1, len(self)):
            out[j] = np.linalg.norm(self.positions[j] - self.positions[self._parents[j]])
        return out

    def max_reach(self) -> np.ndarray:
        """Longest root-to-leaf path length per leaf, using upper prismatic bounds."""
        L = self.home_lengths
        best = np.zeros(len(self))
        for j in range(1, len(self)):
            link = self._links[j]
            best[j] = best[self._parents[j]] + (link.length_bounds[1] if link is not None else L[j])
        return best[self.leaves]

    @property
    def leaf_positions(self) -> np.ndarray:
        return self.positions[self.leaves].copy()

    # -- copies ------------------------------------------------------------------

    def copy(self) -> "SerialChain":
        new = object.__new__(SerialChain)
        new.__dict__.update(self.__dict__)
        new.positions = self.positions.copy()
        return new

    def with_positions(self, positions) -> "SerialChain":
        P = np.ascontiguousarray(positions, dtype=float)
        if P.shape != self.positions.shape:
            raise ChainError(f"positions shape {P.shape} does not match chain {self.positions.shape}")
        new = self.copy()
        new.positions = P.copy()
        return new

    @property
    def kernel(self):
        if self._kernel is None:
            self._kernel = self._build_kernel()
        return self._kernel

    def _build_kernel(self):
        n = len(self)
        L = self.home_lengths
        lo = np.zeros(n)
        hi = np.zeros(n)
        is_prismatic = np.zeros(n, dtype=np.uint8)
        for j, link in enumerate(self._links):
            if link is not None:
                is_prismatic[j] = 1
                lo[j], hi[j] = link.length_bounds
        has_ang = np.array([s.angle_bounds is not None for s in self._specs], dtype=np.uint8)
        ang_lo = np.array([s.angle_bounds[0] if s.angle_bounds else 0.0 for s in self._specs])
        ang_hi = np.array([s.angle_bounds[1] if s.angle_bounds else np.pi for s in self._specs])
        axis = np.array([s.axis if s.axis is not None else (0.0, 0.0, 0.0) for s in self._specs])
        hinge = np.array([s.hinge if s.hinge is not None else (0.0, 0.0, 0.0) for s in self._specs])
        virtual = np.array([s.kind is JointKind.FIXED_VIRTUAL for s in self._specs], dtype=np.uint8)
        signed = np.array([s.signed for s in self._specs], dtype=np.uint8)
        return reach.ChainKernel(np.array(self._parents, dtype=np.intc), L, is_prismatic, lo, hi,
                                 has_ang, ang_lo, ang_hi, axis, hinge, virtual, np.array(self._home), signed)

    def __repr__(self):
        return f"SerialChain(n={len(self)}, leaves={self.leaves}, tree={self.is_tree})"


def _leaf_array(chain: SerialChain, values, name: str) -> np.ndarray:
    n_leaves = len(chain.leaves)
    A = np.ascontiguousarray(values, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.shape[1] == 2:
        A = np.column_stack([A, np.zeros(len(A))])
    if A.shape != (n_leaves, 3):
        raise ChainError(f"expected {n_leaves} {name} for {n_leaves} leaves, got {len(A)}")
    return np.ascontiguousarray(A)


def forward_reach(chain: SerialChain, targets, leaf_axes=None) -> tuple[SerialChain, ReachReport]:
    """Move each leaf onto its target and drag the rest of the chain toward it.

    Branch points take the centroid of the positions proposed by their children.
    Returns a new chain; the input is left untouched.
    """
    T = _leaf_array(chain, targets, "targets")
    A = np.zeros_like(T) if leaf_axes is None else _leaf_array(chain, leaf_axes, "leaf axes")
    out = chain.copy()
    moved, clamps = out.kernel.forward(out.positions, T, A)
    return out, ReachReport(int(moved), int(clamps))


def backward_reach(chain: SerialChain, base=None) -> tuple[SerialChain, ReachReport]:
    """Reset the root onto ``base`` (default: its home position) and re-place joints outward."""
    b = chain.base if base is None else geom.vec3(base)
    out = chain.copy()
    moved, clamps = out.kernel.backward(out.positions, b)
    return out, ReachReport(int(moved), int(clamps))


def apply_angular_limit(s_prev, s_i, s_next, bounds, reference_override=None) -> np.ndarray:
    """Keep the angle at ``s_i`` inside ``bounds``, returning the (possibly moved) ``s_next``.

    The reference direction is ``s_i - s_prev`` unless ``reference_override`` is
    given. When the angle is out of range the reference direction is rotated by
    the clamped angle toward the outgoing link and scaled to the outgoing link
    length, so ``|result - s_i| == |s_next - s_i|``.
    """
    s_i = geom.vec3(s_i)
    s_next = geom.vec3(s_next)
    lo, hi = bounds
    a = geom.vec3(reference_override) if reference_override is not None else s_i - geom.vec3(s_prev)
    b = s_next - s_i
    theta = geom.angle_between(a, b)
    if lo <= theta <= hi:
        return s_next
    theta_bar = geom.clamp(theta, lo, hi)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    c = np.cross(a, b)
    nc = np.linalg.norm(c)
    u = geom.perpendicular(a) if nc <= 1e-12 * na * nb else c / nc
    R = geom.rodrigues(u, theta_bar)
    return s_i + R @ (a / na) * nb


def check_prismatic(d: float, bounds) -> PrismaticCheck:
    lo, hi = bounds
    if lo > hi:
        raise geom.InvalidBoundsError(f"lower bound {lo} exceeds upper bound {hi}")
    if lo <= d <= hi:
        return PrismaticCheck(True, float(d))
    return PrismaticCheck(False, geom.clamp(float(d), lo, hi))


def _straighten(chain: SerialChain, target: np.ndarray) -> np.ndarray:
    """Lay a serial chain along the ray from its base toward ``target`` at full extension."""
    base = chain.base
    u = geom.normalize(target - base)
    P = np.empty_like(chain.positions)
    P[0] = base
    L = chain.home_lengths
    acc = 0.0
    for j in range(1, len(chain)):
        link = chain.links[j]
        acc += link.length_bounds[1] if link is not None else L[j]
        P[j] = base + acc * u
    return P


def solve_serial(chain: SerialChain, targets, config: SolverConfig | None = None,
                 leaf_axes=None) -> tuple[SerialChain, SolveOutcome]:
    """Run FABRIK on a single chain until every leaf is within tolerance.

    Unreachable targets (beyond the summed maximum link lengths) are flagged in
    the outcome rather than raised. A serial chain with an unreachable target is
    laid straight toward it in one pass.
    """
    config = config or SolverConfig()
    T = _leaf_array(chain, targets, "targets")
    A = np.zeros_like(T) if leaf_axes is None else _leaf_array(chain, leaf_axes, "leaf axes")
    out = chain.copy()
    dist = np.linalg.norm(T - chain.base, axis=1)
    reachable = bool(np.all(dist <= chain.max_reach()))
    if not reachable and not chain.is_tree:
        out.positions[:] = _straighten(chain, T[0])
        out.kernel.backward(out.positions, chain.base)
        res = np.linalg.norm(out.positions[chain.leaves] - T, axis=1)
        return out, SolveOutcome(converged=bool(res.max() <= config.tolerance), iterations=1,
                                 residuals=res, joint_positions=[out.positions.copy()],
                                 reachable=False)
    k, converged, res = reach.iterate([out.kernel], [out.positions], [T], [A],
                                      config.tolerance, config.max_iter)
    return out, SolveOutcome(converged=bool(converged), iterations=int(k), residuals=np.asarray(res),
                             joint_positions=[out.positions.copy()], reachable=reachable)
