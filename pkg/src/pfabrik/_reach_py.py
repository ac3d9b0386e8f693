"""Pure-Python reaching kernel.

Mirrors ``_reach_c.pyx`` operation for operation so both backends give the
same floating-point results. Positions are handled as lists of
``[x, y, z]`` lists internally because scalar ``math`` beats ``numpy`` on
3-vectors.
"""

import math

import numpy as np

TINY = 1e-12
PARALLEL_TOL = 1e-12


def _sub(a, b):
    return [a[0] - b[0], a[1] - b[1], a[2] - b[2]]


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _cross(a, b):
    return [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]


def _norm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def _unit_or(v, fallback):
    n = _norm(v)
    if n <= TINY:
        return fallback
    return [v[0] / n, v[1] / n, v[2] / n]


def _perpendicular(a):
    # a is a unit vector; first basis vector giving a non-vanishing cross product
    for k in range(3):
        e = [0.0, 0.0, 0.0]
        e[k] = 1.0
        c = _cross(a, e)
        n = _norm(c)
        if n > 1e-9:
            return [c[0] / n, c[1] / n, c[2] / n]
    return [0.0, 0.0, 1.0]


def _rotate(v, u, theta):
    """Rodrigues rotation of ``v`` about the unit axis ``u``."""
    c = math.cos(theta)
    s = math.sin(theta)
    uxv = _cross(u, v)
    k = _dot(u, v) * (1.0 - c)
    return [
        v[0] * c + uxv[0] * s + u[0] * k,
        v[1] * c + uxv[1] * s + u[1] * k,
        v[2] * c + uxv[2] * s + u[2] * k,
    ]


def _min_rotation_apply(h, c, v):
    """Rotate ``v`` by the shortest rotation taking unit ``h`` onto unit ``c``."""
    axis = _cross(h, c)
    s = _norm(axis)
    co = _dot(h, c)
    if s <= PARALLEL_TOL:
        if co > 0.0:
            return [v[0], v[1], v[2]]
        return _rotate(v, _perpendicular(h), math.pi)
    u = [axis[0] / s, axis[1] / s, axis[2] / s]
    return _rotate(v, u, math.atan2(s, co))


def angular_limit(a, s_i, s_next, lo, hi):
    """Cone limit at ``s_i``; returns ``(new_s_next, clamped)``."""
    b = _sub(s_next, s_i)
    na = _norm(a)
    nb = _norm(b)
    if na <= TINY or nb <= TINY:
        return s_next, False
    c = _dot(a, b) / (na * nb)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    theta = math.acos(c)
    if lo <= theta <= hi:
        return s_next, False
    theta_bar = lo if theta < lo else hi
    ah = [a[0] / na, a[1] / na, a[2] / na]
    axb = _cross(a, b)
    nc = _norm(axb)
    if nc <= PARALLEL_TOL * na * nb:
        u = _perpendicular(ah)
    else:
        u = [axb[0] / nc, axb[1] / nc, axb[2] / nc]
    r = _rotate(ah, u, theta_bar)
    return [s_i[0] + r[0] * nb, s_i[1] + r[1] * nb, s_i[2] + r[2] * nb], True


def hinge_limit(a, s_i, s_next, h, lo, hi):
    """Signed limit about the unit hinge ``h``; returns ``(new_s_next, clamped)``.

    The angle runs from ``a`` to ``s_next - s_i`` (both projected normal to
    ``h``), positive counter-clockwise about ``h``. When it leaves ``[lo, hi]``
    the outgoing link is turned about ``h`` back onto the nearer bound.
    """
    b = _sub(s_next, s_i)
    ka = _dot(a, h)
    kb = _dot(b, h)
    ap = [a[0] - ka * h[0], a[1] - ka * h[1], a[2] - ka * h[2]]
    bp = [b[0] - kb * h[0], b[1] - kb * h[1], b[2] - kb * h[2]]
    if _norm(ap) <= TINY or _norm(bp) <= TINY:
        return s_next, False
    theta = math.atan2(_dot(h, _cross(ap, bp)), _dot(ap, bp))
    if lo <= theta <= hi:
        return s_next, False
    theta_bar = lo if theta < lo else hi
    r = _rotate(b, h, theta_bar - theta)
    return [s_i[0] + r[0], s_i[1] + r[1], s_i[2] + r[2]], True


class ChainKernel:
    """Forward/backward reaching over a rooted joint tree.

    Joints are stored in topological order (``parent[j] < j``, root at 0).
    The link into joint ``j`` is fixed-length, prismatic (``lo``/``hi``), or a
    rigid offset when the parent is a virtual joint.
    """

    def __init__(self, parent, length, prismatic, lo, hi, has_ang, ang_lo, ang_hi,
                 axis, hinge, virtual, home, signed_limits=None):
        n = len(parent)
        self.n = n
        self.parent = [int(p) for p in parent]
        self.length = [float(x) for x in length]
        self.prismatic = [bool(x) for x in prismatic]
        self.lo = [float(x) for x in lo]
        self.hi = [float(x) for x in hi]
        self.has_ang = [bool(x) for x in has_ang]
        self.ang_lo = [float(x) for x in ang_lo]
        self.ang_hi = [float(x) for x in ang_hi]
        self.axis = [[float(v) for v in row] for row in np.asarray(axis, dtype=float)]
        self.hinge = [[float(v) for v in row] for row in np.asarray(hinge, dtype=float)]
        self.has_axis = [_norm(a) > 0.0 for a in self.axis]
        self.has_hinge = [_norm(h) > 0.0 for h in self.hinge]
        self.virtual = [bool(x) for x in virtual]
        self.signed = [False] * n if signed_limits is None else [bool(x) for x in signed_limits]
        self.home = [[float(v) for v in row] for row in np.asarray(home, dtype=float)]
        self.children = [[] for _ in range(n)]
        for j in range(1, n):
            self.children[self.parent[j]].append(j)
        self.rigid = [j > 0 and self.virtual[self.parent[j]] for j in range(n)]
        self.leaves = [j for j in range(n) if not self.children[j]]
        self.leaf_slot = [-1] * n
        for i, j in enumerate(self.leaves):
            self.leaf_slot[j] = i
        # unit home directions of each link, used when a direction degenerates
        self.home_dir = [[0.0, 0.0, 0.0] for _ in range(n)]
        for j in range(1, n):
            self.home_dir[j] = _unit_or(_sub(self.home[j], self.home[self.parent[j]]), [0.0, 0.0, 1.0])
        self.base = list(self.home[0])

    # -- placement helpers -------------------------------------------------

    def _place(self, anchor, toward, j, fallback):
        v = _sub(toward, anchor)
        d = _norm(v)
        clamped = 0
        if self.prismatic[j]:
            if self.lo[j] <= d <= self.hi[j]:
                return [toward[0], toward[1], toward[2]], 0
            dd = self.lo[j] if d < self.lo[j] else self.hi[j]
            clamped = 1
        else:
            dd = self.length[j]
        if d <= TINY:
            u = fallback
        else:
            u = [v[0] / d, v[1] / d, v[2] / d]
        return [anchor[0] + u[0] * dd, anchor[1] + u[1] * dd, anchor[2] + u[2] * dd], clamped

    def _cluster_apply(self, P, j, v):
        p = self.parent[j]
        if p < 0:
            return [v[0], v[1], v[2]]
        c = _unit_or(_sub(P[j], P[p]), self.home_dir[j])
        return _min_rotation_apply(self.home_dir[j], c, v)

    def _place_rigid_children(self, P, j):
        for c in self.children[j]:
            if self.rigid[c]:
                off = self._cluster_apply(P, j, _sub(self.home[c], self.home[j]))
                P[c] = [P[j][0] + off[0], P[j][1] + off[1], P[j][2] + off[2]]

    # -- passes --------------------------------------------------------------

    def _forward(self, P, T, A):
        clamps = 0
        for slot, leaf in enumerate(self.leaves):
            P[leaf] = [T[slot][0], T[slot][1], T[slot][2]]
        for j in range(self.n - 1, -1, -1):
            kids = self.children[j]
            if not kids:
                continue
            sx = sy = sz = 0.0
            for c in kids:
                if self.rigid[c]:
                    off = self._cluster_apply(P, j, _sub(self.home[c], self.home[j]))
                    prop = [P[c][0] - off[0], P[c][1] - off[1], P[c][2] - off[2]]
                else:
                    hd = self.home_dir[c]
                    prop, cl = self._place(P[c], P[j], c, [-hd[0], -hd[1], -hd[2]])
                    clamps += cl
                    if self.has_ang[c]:
                        a = None
                        slot = self.leaf_slot[c]
                        if slot >= 0:
                            if _norm(A[slot]) > 0.0:
                                a = A[slot]
                        elif len(self.children[c]) == 1 and not self.rigid[self.children[c][0]]:
                            a = _sub(P[c], P[self.children[c][0]])
                        if a is not None:
                            if self.signed[c]:
                                # walking the chain backwards reverses the sign of the turn
                                prop, cl = hinge_limit(a, P[c], prop, self.hinge[c], -self.ang_hi[c], -self.ang_lo[c])
                            else:
                                prop, cl = angular_limit(a, P[c], prop, self.ang_lo[c], self.ang_hi[c])
                            clamps += cl
                sx += prop[0]
                sy += prop[1]
                sz += prop[2]
            m = float(len(kids))
            P[j] = [sx / m, sy / m, sz / m]
        for j in range(self.n):
            if self.virtual[j]:
                self._place_rigid_children(P, j)
        return clamps

    def _backward(self, P, base):
        clamps = 0
        P[0] = [base[0], base[1], base[2]]
        for j in range(self.n):
            if self.virtual[j]:
                self._place_rigid_children(P, j)
            for c in self.children[j]:
                if self.rigid[c]:
                    continue
                toward = P[c]
                if self.has_hinge[j]:
                    h = self.hinge[j]
                    v = _sub(toward, P[j])
                    k = _dot(v, h)
                    toward = [P[j][0] + v[0] - k * h[0], P[j][1] + v[1] - k * h[1], P[j][2] + v[2] - k * h[2]]
                newp, cl = self._place(P[j], toward, c, self.home_dir[c])
                clamps += cl
                if self.has_ang[j]:
                    a = None
                    if j == 0:
                        if self.has_axis[0]:
                            a = self.axis[0]
                    else:
                        a = _sub(P[j], P[self.parent[j]])
                    if a is not None:
                        if self.signed[j]:
                            newp, cl = hinge_limit(a, P[j], newp, self.hinge[j], self.ang_lo[j], self.ang_hi[j])
                        else:
                            newp, cl = angular_limit(a, P[j], newp, self.ang_lo[j], self.ang_hi[j])
                        clamps += cl
                P[c] = newp
        return clamps

    def _residuals(self, P, T, out):
        for slot, leaf in enumerate(self.leaves):
            out.append(_norm(_sub(P[leaf], T[slot])))

    # -- array interface -----------------------------------------------------

    def forward(self, pos, targets, axes):
        """Forward-reach ``pos`` (modified in place); returns ``(moved, clamps)``."""
        P = pos.tolist()
        before = [list(p) for p in P]
        clamps = self._forward(P, np.asarray(targets, dtype=float).tolist(),
                               np.asarray(axes, dtype=float).tolist())
        pos[:] = P
        return sum(1 for a, b in zip(before, P) if a != b), clamps

    def backward(self, pos, base=None):
        """Backward-reach ``pos`` from ``base`` (default: home root); returns ``(moved, clamps)``."""
        P = pos.tolist()
        before = [list(p) for p in P]
        b = self.base if base is None else [float(v) for v in base]
        clamps = self._backward(P, b)
        pos[:] = P
        return sum(1 for a, b_ in zip(before, P) if a != b_), clamps


def iterate(kernels, positions, targets, axes, tol, max_iter):
    """Alternate reaching passes over all chains until every leaf is within ``tol``.

    ``positions`` are modified in place. Termination is checked before each
    iteration ``k`` (1-based): stop when converged or when ``k > max_iter``.
    Returns ``(iterations_done, converged, residuals)``.
    """
    Ps = [p.tolist() for p in positions]
    Ts = [np.asarray(t, dtype=float).tolist() for t in targets]
    As = [np.asarray(a, dtype=float).tolist() for a in axes]
    k = 1
    while True:
        res = []
        for kern, P, T in zip(kernels, Ps, Ts):
            kern._residuals(P, T, res)
        if max(res) <= tol:
            converged = True
            break
        if k > max_iter:
            converged = False
            break
        for kern, P, T, A in zip(kernels, Ps, Ts, As):
            kern._forward(P, T, A)
            kern._backward(P, kern.base)
        k += 1
    for p, P in zip(positions, Ps):
        p[:] = P
    return k - 1, converged, res
