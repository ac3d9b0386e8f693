# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled reaching kernel; see ``_reach_py`` for the reference semantics."""

from libc.math cimport sqrt, acos, cos, sin, atan2, M_PI

import numpy as np

cdef double TINY = 1e-12
cdef double PARALLEL_TOL = 1e-12


cdef inline double dot3(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline double norm3(const double* a) noexcept nogil:
    return sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


cdef inline void cross3(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline void perpendicular3(const double* a, double* out) noexcept nogil:
    cdef double e[3]
    cdef double c[3]
    cdef double n
    cdef int k
    for k in range(3):
        e[0] = 0.0
        e[1] = 0.0
        e[2] = 0.0
        e[k] = 1.0
        cross3(a, e, c)
        n = norm3(c)
        if n > 1e-9:
            out[0] = c[0] / n
            out[1] = c[1] / n
            out[2] = c[2] / n
            return
    out[0] = 0.0
    out[1] = 0.0
    out[2] = 1.0


cdef inline void rotate3(const double* v, const double* u, double theta, double* out) noexcept nogil:
    cdef double c = cos(theta)
    cdef double s = sin(theta)
    cdef double uxv[3]
    cross3(u, v, uxv)
    cdef double k = dot3(u, v) * (1.0 - c)
    out[0] = v[0] * c + uxv[0] * s + u[0] * k
    out[1] = v[1] * c + uxv[1] * s + u[1] * k
    out[2] = v[2] * c + uxv[2] * s + u[2] * k


cdef inline void min_rotation_apply(const double* h, const double* c, const double* v, double* out) noexcept nogil:
    cdef double axis[3]
    cdef double u[3]
    cross3(h, c, axis)
    cdef double s = norm3(axis)
    cdef double co = dot3(h, c)
    if s <= PARALLEL_TOL:
        if co > 0.0:
            out[0] = v[0]
            out[1] = v[1]
            out[2] = v[2]
        else:
            perpendicular3(h, u)
            rotate3(v, u, M_PI, out)
        return
    u[0] = axis[0] / s
    u[1] = axis[1] / s
    u[2] = axis[2] / s
    rotate3(v, u, atan2(s, co), out)


cdef inline int angular_limit3(const double* a, const double* s_i, double* s_next,
                               double lo, double hi) noexcept nogil:
    """Cone limit at ``s_i``, rewriting ``s_next`` in place; returns 1 when clamped."""
    cdef double b[3]
    cdef double ah[3]
    cdef double axb[3]
    cdef double u[3]
    cdef double r[3]
    b[0] = s_next[0] - s_i[0]
    b[1] = s_next[1] - s_i[1]
    b[2] = s_next[2] - s_i[2]
    cdef double na = norm3(a)
    cdef double nb = norm3(b)
    if na <= TINY or nb <= TINY:
        return 0
    cdef double c = dot3(a, b) / (na * nb)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    cdef double theta = acos(c)
    if lo <= theta and theta <= hi:
        return 0
    cdef double theta_bar = lo if theta < lo else hi
    ah[0] = a[0] / na
    ah[1] = a[1] / na
    ah[2] = a[2] / na
    cross3(a, b, axb)
    cdef double nc = norm3(axb)
    if nc <= PARALLEL_TOL * na * nb:
        perpendicular3(ah, u)
    else:
        u[0] = axb[0] / nc
        u[1] = axb[1] / nc
        u[2] = axb[2] / nc
    rotate3(ah, u, theta_bar, r)
    s_next[0] = s_i[0] + r[0] * nb
    s_next[1] = s_i[1] + r[1] * nb
    s_next[2] = s_i[2] + r[2] * nb
    return 1


def angular_limit(a, s_i, s_next, double lo, double hi):
    """Python entry point for the cone limit; returns ``(new_s_next, clamped)``."""
    cdef double av[3]
    cdef double si[3]
    cdef double sn[3]
    cdef int k
    for k in range(3):
        av[k] = a[k]
        si[k] = s_i[k]
        sn[k] = s_next[k]
    cdef int clamped = angular_limit3(av, si, sn, lo, hi)
    return [sn[0], sn[1], sn[2]], bool(clamped)


cdef inline int hinge_limit3(const double* a, const double* s_i, double* s_next, const double* h,
                             double lo, double hi) noexcept nogil:
    """Signed limit about hinge ``h``, rewriting ``s_next`` in place; returns 1 when clamped."""
    cdef double b[3]
    cdef double ap[3]
    cdef double bp[3]
    cdef double c[3]
    cdef double r[3]
    b[0] = s_next[0] - s_i[0]
    b[1] = s_next[1] - s_i[1]
    b[2] = s_next[2] - s_i[2]
    cdef double ka = dot3(a, h)
    cdef double kb = dot3(b, h)
    ap[0] = a[0] - ka * h[0]
    ap[1] = a[1] - ka * h[1]
    ap[2] = a[2] - ka * h[2]
    bp[0] = b[0] - kb * h[0]
    bp[1] = b[1] - kb * h[1]
    bp[2] = b[2] - kb * h[2]
    if norm3(ap) <= TINY or norm3(bp) <= TINY:
        return 0
    cross3(ap, bp, c)
    cdef double theta = atan2(dot3(h, c), dot3(ap, bp))
    if lo <= theta and theta <= hi:
        return 0
    cdef double theta_bar = lo if theta < lo else hi
    rotate3(b, h, theta_bar - theta, r)
    s_next[0] = s_i[0] + r[0]
    s_next[1] = s_i[1] + r[1]
    s_next[2] = s_i[2] + r[2]
    return 1


def hinge_limit(a, s_i, s_next, h, double lo, double hi):
    """Python entry point for the signed hinge limit; returns ``(new_s_next, clamped)``."""
    cdef double av[3]
    cdef double si[3]
    cdef double sn[3]
    cdef double hv[3]
    cdef int k
    for k in range(3):
        av[k] = a[k]
        si[k] = s_i[k]
        sn[k] = s_next[k]
        hv[k] = h[k]
    cdef int clamped = hinge_limit3(av, si, sn, hv, lo, hi)
    return [sn[0], sn[1], sn[2]], bool(clamped)


cdef class ChainKernel:
    cdef public int n
    cdef int[::1] parent
    cdef int[::1] child_start
    cdef int[::1] child_idx
    cdef int[::1] leaves
    cdef int[::1] leaf_slot
    cdef int n_leaves
    cdef double[::1] length
    cdef unsigned char[::1] prismatic
    cdef double[::1] lo
    cdef double[::1] hi
    cdef unsigned char[::1] has_ang
    cdef double[::1] ang_lo
    cdef double[::1] ang_hi
    cdef double[:, ::1] axis
    cdef double[:, ::1] hinge
    cdef unsigned char[::1] has_axis
    cdef unsigned char[::1] has_hinge
    cdef unsigned char[::1] virtual
    cdef unsigned char[::1] signed_lim
    cdef unsigned char[::1] rigid
    cdef double[:, ::1] home
    cdef double[:, ::1] home_dir
    cdef public object base
    cdef double[::1] base_v
    cdef double[:, ::1] scratch

    def __init__(self, parent, length, prismatic, lo, hi, has_ang, ang_lo, ang_hi,
                 axis, hinge, virtual, home, signed_limits=None):
        cdef int n = len(parent)
        cdef int j, p, pos
        self.n = n
        self.parent = np.ascontiguousarray(parent, dtype=np.intc)
        self.length = np.ascontiguousarray(length, dtype=np.float64)
        self.prismatic = np.ascontiguousarray(prismatic, dtype=np.uint8)
        self.lo = np.ascontiguousarray(lo, dtype=np.float64)
        self.hi = np.ascontiguousarray(hi, dtype=np.float64)
        self.has_ang = np.ascontiguousarray(has_ang, dtype=np.uint8)
        self.ang_lo = np.ascontiguousarray(ang_lo, dtype=np.float64)
        self.ang_hi = np.ascontiguousarray(ang_hi, dtype=np.float64)
        axis_a = np.ascontiguousarray(axis, dtype=np.float64).reshape(n, 3)
        hinge_a = np.ascontiguousarray(hinge, dtype=np.float64).reshape(n, 3)
        self.axis = axis_a
        self.hinge = hinge_a
        self.has_axis = (np.sqrt((axis_a * axis_a).sum(axis=1)) > 0.0).astype(np.uint8)
        self.has_hinge = (np.sqrt((hinge_a * hinge_a).sum(axis=1)) > 0.0).astype(np.uint8)
        virt = np.ascontiguousarray(virtual, dtype=np.uint8)
        self.virtual = virt
        self.signed_lim = np.zeros(n, dtype=np.uint8) if signed_limits is None else np.ascontiguousarray(signed_limits, dtype=np.uint8)
        home_a = np.ascontiguousarray(home, dtype=np.float64).reshape(n, 3)
        self.home = home_a

        counts = np.zeros(n, dtype=np.intc)
        for j in range(1, n):
            counts[self.parent[j]] += 1
        starts = np.zeros(n + 1, dtype=np.intc)
        starts[1:] = np.cumsum(counts)
        idx = np.zeros(max(n - 1, 1), dtype=np.intc)
        fill = starts[:-1].copy()
        for j in range(1, n):
            p = self.parent[j]
            idx[fill[p]] = j
            fill[p] += 1
        self.child_start = starts
        self.child_idx = idx
        leaves = np.array([j for j in range(n) if counts[j] == 0], dtype=np.intc)
        self.leaves = leaves
        self.n_leaves = len(leaves)
        slots = -np.ones(n, dtype=np.intc)
        for pos in range(len(leaves)):
            slots[leaves[pos]] = pos
        self.leaf_slot = slots
        rig = np.zeros(n, dtype=np.uint8)
        for j in range(1, n):
            rig[j] = 1 if virt[self.parent[j]] else 0
        self.rigid = rig

        hd = np.zeros((n, 3), dtype=np.float64)
        for j in range(1, n):
            v = [home_a[j, 0] - home_a[self.parent[j], 0],
                 home_a[j, 1] - home_a[self.parent[j], 1],
                 home_a[j, 2] - home_a[self.parent[j], 2]]
            nv = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            if nv <= TINY:
                hd[j, 2] = 1.0
            else:
                hd[j, 0] = v[0] / nv
                hd[j, 1] = v[1] / nv
                hd[j, 2] = v[2] / nv
        self.home_dir = hd
        self.base = [float(home_a[0, 0]), float(home_a[0, 1]), float(home_a[0, 2])]
        self.base_v = np.array(self.base, dtype=np.float64)
        self.scratch = np.zeros((n, 3), dtype=np.float64)

    # -- helpers --------------------------------------------------------------

    cdef inline int _place(self, const double* anchor, const double* toward, int j,
                           const double* fallback, double* out) noexcept nogil:
        cdef double v[3]
        cdef double u[3]
        v[0] = toward[0] - anchor[0]
        v[1] = toward[1] - anchor[1]
        v[2] = toward[2] - anchor[2]
        cdef double d = norm3(v)
        cdef double dd
        cdef int clamped = 0
        if self.prismatic[j]:
            if self.lo[j] <= d and d <= self.hi[j]:
                out[0] = toward[0]
                out[1] = toward[1]
                out[2] = toward[2]
                return 0
            dd = self.lo[j] if d < self.lo[j] else self.hi[j]
            clamped = 1
        else:
            dd = self.length[j]
        if d <= TINY:
            u[0] = fallback[0]
            u[1] = fallback[1]
            u[2] = fallback[2]
        else:
            u[0] = v[0] / d
            u[1] = v[1] / d
            u[2] = v[2] / d
        out[0] = anchor[0] + u[0] * dd
        out[1] = anchor[1] + u[1] * dd
        out[2] = anchor[2] + u[2] * dd
        return clamped

    cdef inline void _cluster_apply(self, double[:, ::1] P, int j, const double* v, double* out) noexcept nogil:
        cdef int p = self.parent[j]
        cdef double c[3]
        cdef double nc
        if p < 0:
            out[0] = v[0]
            out[1] = v[1]
            out[2] = v[2]
            return
        c[0] = P[j, 0] - P[p, 0]
        c[1] = P[j, 1] - P[p, 1]
        c[2] = P[j, 2] - P[p, 2]
        nc = norm3(c)
        if nc <= TINY:
            c[0] = self.home_dir[j, 0]
            c[1] = self.home_dir[j, 1]
            c[2] = self.home_dir[j, 2]
        else:
            c[0] = c[0] / nc
            c[1] = c[1] / nc
            c[2] = c[2] / nc
        min_rotation_apply(&self.home_dir[j, 0], c, v, out)

    cdef inline void _place_rigid_children(self, double[:, ::1] P, int j) noexcept nogil:
        cdef int q, c
        cdef double v[3]
        cdef double off[3]
        for q in range(self.child_start[j], self.child_start[j + 1]):
            c = self.child_idx[q]
            if self.rigid[c]:
                v[0] = self.home[c, 0] - self.home[j, 0]
                v[1] = self.home[c, 1] - self.home[j, 1]
                v[2] = self.home[c, 2] - self.home[j, 2]
                self._cluster_apply(P, j, v, off)
                P[c, 0] = P[j, 0] + off[0]
                P[c, 1] = P[j, 1] + off[1]
                P[c, 2] = P[j, 2] + off[2]

    # -- passes ---------------------------------------------------------------

    cdef int _forward(self, double[:, ::1] P, double[:, ::1] T, double[:, ::1] A) noexcept nogil:
        cdef int clamps = 0
        cdef int slot, leaf, j, q, c, gc, m
        cdef double sx, sy, sz
        cdef double prop[3]
        cdef double v[3]
        cdef double off[3]
        cdef double fb[3]
        cdef double a[3]
        cdef int use_a
        for slot in range(self.n_leaves):
            leaf = self.leaves[slot]
            P[leaf, 0] = T[slot, 0]
            P[leaf, 1] = T[slot, 1]
            P[leaf, 2] = T[slot, 2]
        for j in range(self.n - 1, -1, -1):
            m = self.child_start[j + 1] - self.child_start[j]
            if m == 0:
                continue
            sx = 0.0
            sy = 0.0
            sz = 0.0
            for q in range(self.child_start[j], self.child_start[j + 1]):
                c = self.child_idx[q]
                if self.rigid[c]:
                    v[0] = self.home[c, 0] - self.home[j, 0]
                    v[1] = self.home[c, 1] - self.home[j, 1]
                    v[2] = self.home[c, 2] - self.home[j, 2]
                    self._cluster_apply(P, j, v, off)
                    prop[0] = P[c, 0] - off[0]
                    prop[1] = P[c, 1] - off[1]
                    prop[2] = P[c, 2] - off[2]
                else:
                    fb[0] = -self.home_dir[c, 0]
                    fb[1] = -self.home_dir[c, 1]
                    fb[2] = -self.home_dir[c, 2]
                    clamps += self._place(&P[c, 0], &P[j, 0], c, fb, prop)
                    if self.has_ang[c]:
                        use_a = 0
                        slot = self.leaf_slot[c]
                        if slot >= 0:
                            if norm3(&A[slot, 0]) > 0.0:
                                a[0] = A[slot, 0]
                                a[1] = A[slot, 1]
                                a[2] = A[slot, 2]
                                use_a = 1
                        elif self.child_start[c + 1] - self.child_start[c] == 1:
                            gc = self.child_idx[self.child_start[c]]
                            if not self.rigid[gc]:
                                a[0] = P[c, 0] - P[gc, 0]
                                a[1] = P[c, 1] - P[gc, 1]
                                a[2] = P[c, 2] - P[gc, 2]
                                use_a = 1
                        if use_a:
                            if self.signed_lim[c]:
                                clamps += hinge_limit3(a, &P[c, 0], prop, &self.hinge[c, 0],
                                                       -self.ang_hi[c], -self.ang_lo[c])
                            else:
                                clamps += angular_limit3(a, &P[c, 0], prop, self.ang_lo[c], self.ang_hi[c])
                sx += prop[0]
                sy += prop[1]
                sz += prop[2]
            P[j, 0] = sx / <double>m
            P[j, 1] = sy / <double>m
            P[j, 2] = sz / <double>m
        for j in range(self.n):
            if self.virtual[j]:
                self._place_rigid_children(P, j)
        return clamps

    cdef int _backward(self, double[:, ::1] P, const double* base) noexcept nogil:
        cdef int clamps = 0
        cdef int j, q, c, p
        cdef double toward[3]
        cdef double newp[3]
        cdef double v[3]
        cdef double a[3]
        cdef double k
        cdef int use_a
        P[0, 0] = base[0]
        P[0, 1] = base[1]
        P[0, 2] = base[2]
        for j in range(self.n):
            if self.virtual[j]:
                self._place_rigid_children(P, j)
            for q in range(self.child_start[j], self.child_start[j + 1]):
                c = self.child_idx[q]
                if self.rigid[c]:
                    continue
                toward[0] = P[c, 0]
                toward[1] = P[c, 1]
                toward[2] = P[c, 2]
                if self.has_hinge[j]:
                    v[0] = toward[0] - P[j, 0]
                    v[1] = toward[1] - P[j, 1]
                    v[2] = toward[2] - P[j, 2]
                    k = dot3(v, &self.hinge[j, 0])
                    toward[0] = P[j, 0] + v[0] - k * self.hinge[j, 0]
                    toward[1] = P[j, 1] + v[1] - k * self.hinge[j, 1]
                    toward[2] = P[j, 2] + v[2] - k * self.hinge[j, 2]
                clamps += self._place(&P[j, 0], toward, c, &self.home_dir[c, 0], newp)
                if self.has_ang[j]:
                    use_a = 0
                    if j == 0:
                        if self.has_axis[0]:
                            a[0] = self.axis[0, 0]
                            a[1] = self.axis[0, 1]
                            a[2] = self.axis[0, 2]
                            use_a = 1
                    else:
                        p = self.parent[j]
                        a[0] = P[j, 0] - P[p, 0]
                        a[1] = P[j, 1] - P[p, 1]
                        a[2] = P[j, 2] - P[p, 2]
                        use_a = 1
                    if use_a:
                        if self.signed_lim[j]:
                            clamps += hinge_limit3(a, &P[j, 0], newp, &self.hinge[j, 0], self.ang_lo[j], self.ang_hi[j])
                        else:
                            clamps += angular_limit3(a, &P[j, 0], newp, self.ang_lo[j], self.ang_hi[j])
                P[c, 0] = newp[0]
                P[c, 1] = newp[1]
                P[c, 2] = newp[2]
        return clamps

    cdef double _max_residual(self, double[:, ::1] P, double[:, ::1] T, double current) noexcept nogil:
        cdef int slot, leaf
        cdef double d[3]
        cdef double r
        for slot in range(self.n_leaves):
            leaf = self.leaves[slot]
            d[0] = P[leaf, 0] - T[slot, 0]
            d[1] = P[leaf, 1] - T[slot, 1]
            d[2] = P[leaf, 2] - T[slot, 2]
            r = norm3(d)
            if r > current:
                current = r
        return current

    cdef int _moved(self, double[:, ::1] P) noexcept nogil:
        cdef int j, moved = 0
        for j in range(self.n):
            if (P[j, 0] != self.scratch[j, 0] or P[j, 1] != self.scratch[j, 1]
                    or P[j, 2] != self.scratch[j, 2]):
                moved += 1
        return moved

    # -- Python interface -----------------------------------------------------

    def residuals(self, double[:, ::1] P, double[:, ::1] T):
        cdef int slot, leaf
        cdef double d[3]
        out = []
        for slot in range(self.n_leaves):
            leaf = self.leaves[slot]
            d[0] = P[leaf, 0] - T[slot, 0]
            d[1] = P[leaf, 1] - T[slot, 1]
            d[2] = P[leaf, 2] - T[slot, 2]
            out.append(norm3(d))
        return out

    def forward(self, double[:, ::1] pos, targets, axes):
        """Forward-reach ``pos`` (modified in place); returns ``(moved, clamps)``."""
        cdef double[:, ::1] T = np.ascontiguousarray(targets, dtype=np.float64).reshape(self.n_leaves, 3)
        cdef double[:, ::1] A = np.ascontiguousarray(axes, dtype=np.float64).reshape(self.n_leaves, 3)
        self.scratch[:, :] = pos
        cdef int clamps = self._forward(pos, T, A)
        return self._moved(pos), clamps

    def backward(self, double[:, ::1] pos, base=None):
        """Backward-reach ``pos`` from ``base`` (default: home root); returns ``(moved, clamps)``."""
        cdef double[::1] b = self.base_v if base is None else np.ascontiguousarray(base, dtype=np.float64)
        self.scratch[:, :] = pos
        cdef int clamps = self._backward(pos, &b[0])
        return self._moved(pos), clamps


def iterate(list kernels, list positions, list targets, list axes, double tol, int max_iter):
    """Alternate reaching passes over all chains; see ``_reach_py.iterate``."""
    cdef int nc = len(kernels)
    cdef int i, k
    cdef double worst
    cdef bint converged
    cdef ChainKernel kern
    Ps = [p for p in positions]
    Ts = [np.ascontiguousarray(t, dtype=np.float64).reshape(-1, 3) for t in targets]
    As = [np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 3) for a in axes]
    cdef list views_p = []
    cdef list views_t = []
    cdef list views_a = []
    cdef double[:, ::1] mv
    for i in range(nc):
        mv = Ps[i]
        views_p.append(mv)
        mv = Ts[i]
        views_t.append(mv)
        mv = As[i]
        views_a.append(mv)
    cdef double[:, ::1] P
    cdef double[:, ::1] T
    cdef double[:, ::1] A
    k = 1
    while True:
        worst = 0.0
        for i in range(nc):
            kern = <ChainKernel>kernels[i]
            P = views_p[i]
            T = views_t[i]
            worst = kern._max_residual(P, T, worst)
        if worst <= tol:
            converged = True
            break
        if k > max_iter:
            converged = False
            break
        for i in range(nc):
            kern = <ChainKernel>kernels[i]
            P = views_p[i]
            T = views_t[i]
            A = views_a[i]
            kern._forward(P, T, A)
            kern._backward(P, &kern.base_v[0])
        k += 1
    res = []
    for i in range(nc):
        res.extend((<ChainKernel>kernels[i]).residuals(Ps[i], Ts[i]))
    return k - 1, converged, res
