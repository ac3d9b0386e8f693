import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfabrik import geom
from conftest import expm_series

finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = st.tuples(finite, finite, finite).map(np.array)
unit_axes = vectors.filter(lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: v / np.linalg.norm(v))
angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


class TestSkew:
    def test_x_axis_rows(self):
        assert np.array_equal(geom.skew([1, 0, 0]), [[0, 0, 0], [0, 0, -1], [0, 1, 0]])

    def test_zero(self):
        assert np.array_equal(geom.skew([0, 0, 0]), np.zeros((3, 3)))

    def test_cross_product(self):
        assert np.allclose(geom.skew([0, 0, 1]) @ [1, 0, 0], [0, 1, 0])

    @given(vectors, vectors)
    def test_antisymmetric_and_cross(self, u, v):
        K = geom.skew(u)
        assert np.array_equal(K.T, -K)
        assert np.allclose(K @ v, np.cross(u, v), atol=1e-9 * (1 + np.linalg.norm(u) * np.linalg.norm(v)))


class TestRodrigues:
    def test_zero_angle_is_identity(self):
        assert np.array_equal(geom.rodrigues([0, 0, 1], 0.0), np.eye(3))

    def test_quarter_turn(self):
        assert np.allclose(geom.rodrigues([0, 0, 1], math.pi / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-15)

    def test_body_diagonal_third_turn(self):
        u = np.ones(3) / math.sqrt(3)
        R = geom.rodrigues(u, 2 * math.pi / 3)
        oracle = expm_series(geom.skew(u) * 2 * math.pi / 3)
        assert np.allclose(R, oracle, atol=1e-12)
        assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-12)

    def test_non_unit_axis_rejected(self):
        with pytest.raises(geom.AxisNotNormalizedError):
            geom.rodrigues([0, 0, 2], 1.0)

    @settings(max_examples=300)
    @given(unit_axes, angles, angles)
    def test_orthonormal_and_composes(self, u, a, b):
        R = geom.rodrigues(u, a)
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-9)
        assert abs(np.linalg.det(R) - 1) <= 1e-9
        assert np.allclose(R @ u, u, atol=1e-9)
        assert np.allclose(R @ geom.rodrigues(u, b), geom.rodrigues(u, a + b), atol=1e-9)

    @settings(max_examples=100)
    @given(unit_axes, angles)
    def test_matches_series_exponential(self, u, a):
        assert np.allclose(geom.rodrigues(u, a), expm_series(geom.skew(u) * a, 60), atol=1e-9)


class TestReposition:
    def test_axis_aligned(self):
        assert np.array_equal(geom.reposition([0, 0, 0], [2, 0, 0], 1), [1, 0, 0])

    def test_full_distance(self):
        assert np.allclose(geom.reposition([0, 0, 0], [3, 4, 0], 5), [3, 4, 0])

    def test_offset_anchor(self):
        anchor = np.array([1.0, 1.0, 0.0])
        assert np.allclose(geom.reposition(anchor, anchor + [0.6, 0.8, 0], 10), [7, 9, 0])

    def test_coincident_points(self):
        with pytest.raises(geom.DegenerateDirectionError):
            geom.reposition([1, 2, 3], [1, 2, 3], 1.0)

    @given(vectors, vectors, st.floats(0, 1e3))
    def test_preserves_distance(self, a, t, d):
        if np.linalg.norm(t - a) < 1e-6:
            return
        p = geom.reposition(a, t, d)
        assert abs(np.linalg.norm(p - a) - d) <= 1e-12 * max(1.0, d, np.linalg.norm(a))


class TestClampAndAngle:
    @pytest.mark.parametrize("x, expected", [(5, 4), (3, 3), (1, 2)])
    def test_clamp(self, x, expected):
        assert geom.clamp(x, 2, 4) == expected

    def test_clamp_bad_bounds(self):
        with pytest.raises(geom.InvalidBoundsError):
            geom.clamp(1, 4, 2)

    def test_right_angle(self):
        assert geom.angle_between([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)

    def test_parallel(self):
        assert geom.angle_between([1, 0, 0], [1, 0, 0]) == 0.0

    def test_antiparallel_no_nan(self):
        a = geom.angle_between([1, 0, 0], [-1, 1e-12, 0])
        assert math.isfinite(a) and a == pytest.approx(math.pi, abs=1e-9)

    def test_zero_vector(self):
        with pytest.raises(geom.DegenerateDirectionError):
            geom.angle_between([0, 0, 0], [1, 0, 0])


class TestRotationHelpers:
    @settings(max_examples=200)
    @given(unit_axes, st.floats(0, math.pi - 1e-3))
    def test_rotation_vector_round_trip(self, u, a):
        R = geom.rodrigues(u, a)
        assert np.allclose(geom.from_rotation_vector(geom.rotation_vector(R)), R, atol=1e-9)
        assert geom.rotation_angle(R) == pytest.approx(a, abs=1e-7)

    def test_half_turn_rotation_vector(self):
        R = geom.rodrigues([0, 1, 0], math.pi)
        w = geom.rotation_vector(R)
        assert np.allclose(np.abs(w), [0, math.pi, 0], atol=1e-9)

    def test_rpy_order(self):
        R = geom.rpy(0.1, 0.2, 0.3)
        ex, ey, ez = np.eye(3)
        oracle = expm_series(geom.skew(ez) * 0.3) @ expm_series(geom.skew(ey) * 0.2) @ expm_series(geom.skew(ex) * 0.1)
        assert np.allclose(R, oracle, atol=1e-12)

    def test_fit_rotation_recovers_rotation(self):
        rng = np.random.default_rng(3)
        P = rng.normal(size=(6, 3))
        R = geom.rpy(0.3, -0.2, 1.1)
        Q = P @ R.T + [5, -2, 1]
        assert np.allclose(geom.fit_rotation(P, Q), R, atol=1e-12)

    def test_perpendicular(self):
        for a in ([1, 0, 0], [0, 0, 3], [1, 1, 1]):
            p = geom.perpendicular(a)
            assert abs(np.dot(p, a)) < 1e-12 and np.linalg.norm(p) == pytest.approx(1.0)
