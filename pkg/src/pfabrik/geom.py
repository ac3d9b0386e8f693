"""Elementary 3D vector and rotation helpers.

All lengths are millimetres and all angles radians. Vectors are plain
``numpy`` arrays of shape ``(3,)``; rotations are ``(3, 3)`` arrays.
"""

from __future__ import annotations

import math

import numpy as np

AXIS_TOL = 1e-6


class GeometryError(ValueError):
    """Base class for invalid geometric input."""


class DegenerateDirectionError(GeometryError):
    """Raised when a direction is requested from coincident points or a zero vector."""


class AxisNotNormalizedError(GeometryError):
    """Raised when a rotation axis is not a unit vector."""


class InvalidBoundsError(GeometryError):
    """Raised when a lower bound exceeds its upper bound."""


def vec3(v) -> np.ndarray:
    """Coerce ``v`` to a float ``(3,)`` array, padding planar input with ``z = 0``."""
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape == (2,):
        a = np.array([a[0], a[1], 0.0])
    if a.shape != (3,):
        raise GeometryError(f"expected a 2- or 3-vector, got shape {np.shape(v)}")
    return a


def skew(u) -> np.ndarray:
    """Return the skew-symmetric matrix ``K`` with ``K @ v == cross(u, v)``."""
    ux, uy, uz = vec3(u)
    return np.array(
        [
            [0.0, -uz, uy],
            [uz, 0.0, -ux],
            [-uy, ux, 0.0],
        ]
    )


def rodrigues(u, theta: float) -> np.ndarray:
    """Rotation matrix for a turn of ``theta`` radians about the unit axis ``u``.

    Raises:
        AxisNotNormalizedError: if ``|u|`` differs from 1 by more than ``1e-6``.
    """
    u = vec3(u)
    n = np.linalg.norm(u)
    if abs(n - 1.0) > AXIS_TOL:
        raise AxisNotNormalizedError(f"rotation axis has norm {n:.9g}, expected 1")
    K = skew(u)
    c = math.cos(theta)
    s = math.sin(theta)
    return c * np.eye(3) + s * K + (1.0 - c) * np.outer(u, u)


def reposition(anchor, toward, d: float) -> np.ndarray:
    """Point at distance ``d`` from ``anchor`` on the ray through ``toward``."""
    anchor = vec3(anchor)
    v = vec3(toward) - anchor
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateDirectionError("anchor and toward coincide")
    if d < 0:
        raise GeometryError(f"distance must be non-negative, got {d}")
    return anchor + d * (v / n)


def clamp(x: float, lo: float, hi: float) -> float:
    if lo > hi:
        raise InvalidBoundsError(f"lower bound {lo} exceeds upper bound {hi}")
    return min(max(x, lo), hi)


def angle_between(a, b) -> float:
    """Unsigned angle in ``[0, pi]`` between two non-zero vectors."""
    a = vec3(a)
    b = vec3(b)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateDirectionError("angle undefined for a zero-length vector")
    c = float(np.dot(a, b) / (na * nb))
    return math.acos(min(1.0, max(-1.0, c)))


def normalize(v) -> np.ndarray:
    v = vec3(v)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateDirectionError("cannot normalize a zero vector")
    return v / n


def perpendicular(a) -> np.ndarray:
    """Unit vector orthogonal to ``a``: ``a x e`` for the first basis vector ``e`` not parallel to ``a``."""
    a = normalize(a)
    for e in np.eye(3):
        c = np.cross(a, e)
        n = np.linalg.norm(c)
        if n > 1e-9:
            return c / n
    raise DegenerateDirectionError("no perpendicular found")  # unreachable for unit a


def rotation_vector(R) -> np.ndarray:
    """Axis-angle vector (axis scaled by angle) of a rotation matrix."""
    R = np.asarray(R, dtype=float)
    c = (np.trace(R) - 1.0) / 2.0
    theta = math.acos(min(1.0, max(-1.0, c)))
    if theta < 1e-12:
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    if math.pi - theta < 1e-6:
        # near a half turn the antisymmetric part vanishes; read the axis off R + I
        M = (R + np.eye(3)) / 2.0
        k = int(np.argmax(np.diag(M)))
        axis = M[:, k] / math.sqrt(max(M[k, k], 1e-300))
        return normalize(axis) * theta
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return w * (theta / (2.0 * math.sin(theta)))


def from_rotation_vector(w) -> np.ndarray:
    w = vec3(w)
    theta = float(np.linalg.norm(w))
    if theta == 0.0:
        return np.eye(3)
    return rodrigues(w / theta, theta)


def rotation_angle(R) -> float:
    """Rotation angle in radians of ``R``, in ``[0, pi]``."""
    c = (np.trace(np.asarray(R, dtype=float)) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))


def rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    ex, ey, ez = np.eye(3)
    return rodrigues(ez, yaw) @ rodrigues(ey, pitch) @ rodrigues(ex, roll)


def fit_rotation(reference: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """Best rotation mapping centred ``reference`` points onto centred ``observed`` points (Kabsch)."""
    P = np.asarray(reference, dtype=float)
    Q = np.asarray(observed, dtype=float)
    P = P - P.mean(axis=0)
    Q = Q - Q.mean(axis=0)
    U, _, Vt = np.linalg.svd(P.T @ Q)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    D = np.diag([1.0, 1.0, d if d != 0 else 1.0])
    return Vt.T @ D @ U.T
