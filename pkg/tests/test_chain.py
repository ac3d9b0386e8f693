import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfabrik import _reach_py, geom
from pfabrik.chain import (VIRTUAL, ChainError, JointKind, JointSpec, SerialChain, apply_angular_limit,
                           backward_reach, check_prismatic, forward_reach, prismatic, revolute,
                           solve_serial, spherical, universal)
from pfabrik.model import InvalidConfigError, SolverConfig


def straight(n, step=1.0):
    return SerialChain([[step * i, 0, 0] for i in range(n)], [spherical()] * n)


def y_tree():
    pos = [[0, 0, 0], [0, 0, 1], [1, 0, 2], [-1, 0, 2]]
    return SerialChain(pos, [spherical()] * 4, parents=[-1, 0, 1, 1])


@st.composite
def random_chains(draw, prismatic_ok=True):
    """Serial chains with random joint positions; some links prismatic."""
    n = draw(st.integers(3, 6))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    steps = rng.normal(size=(n - 1, 3))
    steps /= np.linalg.norm(steps, axis=1)[:, None]
    steps *= rng.uniform(0.5, 2.0, size=(n - 1, 1))
    pos = np.vstack([np.zeros(3), np.cumsum(steps, axis=0)])
    links = [None]
    for j in range(1, n):
        if prismatic_ok and rng.random() < 0.3:
            L = np.linalg.norm(steps[j - 1])
            links.append(prismatic(0.7 * L, 1.4 * L))
        else:
            links.append(None)
    target = rng.normal(size=3) * 2.0
    return SerialChain(pos, [spherical()] * n, links=links), target


def check_links(chain, positions, tol=1e-6):
    L = chain.home_lengths
    for j in range(1, len(chain)):
        d = np.linalg.norm(positions[j] - positions[chain.parents[j]])
        link = chain.links[j]
        if link is None:
            assert abs(d - L[j]) <= tol, (j, d, L[j])
        else:
            lo, hi = link.length_bounds
            assert lo - tol <= d <= hi + tol, (j, d, link.length_bounds)


class TestStructure:
    def test_specs_validate_bounds(self):
        with pytest.raises(ChainError):
            prismatic(2, 1)
        with pytest.raises(ChainError):
            spherical((1.0, 0.5))
        with pytest.raises(ChainError):
            JointSpec(JointKind.FIXED_VIRTUAL, angle_bounds=(0, 1))

    def test_needs_two_joints(self):
        with pytest.raises(ChainError):
            SerialChain([[0, 0, 0]], [spherical()])

    def test_target_count_mismatch(self):
        with pytest.raises(ChainError):
            forward_reach(y_tree(), [[1, 0, 0]])

    def test_leaves_and_tree(self):
        t = y_tree()
        assert t.leaves == [2, 3] and t.is_tree
        assert straight(3).leaves == [2] and not straight(3).is_tree

    def test_axes_are_normalised(self):
        assert universal(axis=(0, 0, 5)).axis == (0.0, 0.0, 1.0)


class TestForwardBackward:
    def test_single_link_forward(self):
        out, rep = forward_reach(straight(2), [0, 2, 0])
        assert np.array_equal(out.positions, [[0, 1, 0], [0, 2, 0]])
        assert rep.moved_joint_count == 2

    def test_forward_moves_base(self):
        out, _ = forward_reach(straight(4), [1.5, 1.5, 0])
        assert not np.array_equal(out.positions[0], [0, 0, 0])

    def test_input_not_mutated(self):
        c = straight(3)
        before = c.positions.copy()
        forward_reach(c, [0, 1, 1])
        assert np.array_equal(c.positions, before)

    def test_prismatic_clamped_in_forward(self):
        c = SerialChain([[0, 0, 0], [1, 0, 0], [2.5, 0, 0]], [spherical()] * 3,
                        links=[None, None, prismatic(1, 2)])
        out, rep = forward_reach(c, [5, 0, 0])
        # the prismatic link would stretch to 4; it is clamped to 2 and the next joint placed at that distance
        assert np.allclose(out.positions, [[2, 0, 0], [3, 0, 0], [5, 0, 0]])
        assert rep.limit_clamps_applied == 1

    def test_prismatic_within_bounds_is_kept(self):
        c = SerialChain([[0, 0, 0], [1, 0, 0], [2.5, 0, 0]], [spherical()] * 3,
                        links=[None, None, prismatic(1, 2)])
        out, rep = forward_reach(c, [2.5, 0.5, 0])
        assert np.array_equal(out.positions[1], [1, 0, 0])
        assert rep.limit_clamps_applied == 0

    def test_backward_mirror(self):
        fwd, _ = forward_reach(straight(2), [0, 2, 0])
        out, _ = backward_reach(fwd, [0, 0, 0])
        assert np.array_equal(out.positions, [[0, 0, 0], [0, 1, 0]])

    def test_backward_restores_base(self):
        c = straight(4)
        fwd, _ = forward_reach(c, [1.5, 1.5, 0])
        out, _ = backward_reach(fwd)
        assert np.array_equal(out.positions[0], c.base)

    def test_tree_backward_keeps_leaf_lengths(self):
        t = y_tree()
        fwd, _ = forward_reach(t, [[1, 1, 2], [-1, 0.5, 1.5]])
        out, _ = backward_reach(fwd)
        check_links(t, out.positions, 1e-12)

    def test_tree_branch_is_centroid(self):
        # two leaves pulling the branch point to different proposals
        t = SerialChain([[0, 0, 0], [0, 0, 1], [1, 0, 1], [-1, 0, 1]], [spherical()] * 4, parents=[-1, 0, 1, 1])
        out, _ = forward_reach(t, [[3, 0, 1], [-1, 2, 1]])
        p_a = geom.reposition([3, 0, 1], [0, 0, 1], 1.0)
        p_b = geom.reposition([-1, 2, 1], [0, 0, 1], 1.0)
        assert np.allclose(out.positions[1], (p_a + p_b) / 2)

    def test_virtual_cluster_is_rigid(self):
        pos = [[0, 0, 0], [0, 0, 1], [0.3, 0, 1], [-0.3, 0, 1], [0.3, 0, 2], [-0.3, 0, 2]]
        specs = [spherical(), VIRTUAL, spherical(), spherical(), spherical(), spherical()]
        c = SerialChain(pos, specs, parents=[-1, 0, 1, 1, 2, 3])
        fwd, _ = forward_reach(c, [[1, 0.5, 1.5], [0.5, 0.5, 1.6]])
        out, _ = backward_reach(fwd)
        assert np.linalg.norm(out.positions[2] - out.positions[3]) == pytest.approx(0.6, abs=1e-12)
        assert np.allclose(out.positions[1], (out.positions[2] + out.positions[3]) / 2, atol=1e-12)

    @settings(max_examples=200)
    @given(random_chains())
    def test_base_anchoring_bitwise(self, case):
        c, t = case
        fwd, _ = forward_reach(c, t)
        b = np.array([0.1, -0.2, 0.3])
        out, _ = backward_reach(fwd, b)
        assert np.array_equal(out.positions[0], b)


class TestAngularLimit:
    def test_inside_bounds_unchanged(self):
        s = np.array([0.5, 0.0, 1.0])
        assert np.array_equal(apply_angular_limit([0, 0, -1], [0, 0, 0], s, (0, math.pi / 2)), s)

    def test_clamped_to_quarter_turn(self):
        out = apply_angular_limit([0, 0, -1], [0, 0, 0], [1, 0, 0], (0, math.pi / 4))
        # explicit Rodrigues arithmetic: rotate a=(0,0,1) by pi/4 about (a x b)/|a x b| = (0,1,0)
        u = np.cross([0, 0, 1], [1, 0, 0])
        expected = np.cos(math.pi / 4) * np.array([0, 0, 1.0]) + np.sin(math.pi / 4) * np.cross(u, [0, 0, 1])
        assert np.allclose(out, expected, atol=1e-15)
        assert np.allclose(out, np.array([1, 0, 1]) / math.sqrt(2))

    def test_reference_override(self):
        out = apply_angular_limit(None, [1, 1, 0], [3, 1, 0], (0, math.pi / 4), reference_override=[0, 0, 1])
        assert np.allclose(out, [1 + math.sqrt(2), 1, math.sqrt(2)])

    def test_parallel_out_of_bounds_picks_perpendicular_axis(self):
        out = apply_angular_limit([0, 0, -1], [0, 0, 0], [0, 0, 2], (math.pi / 6, math.pi / 2))
        assert geom.angle_between([0, 0, 1], out) == pytest.approx(math.pi / 6)
        assert np.linalg.norm(out) == pytest.approx(2.0)

    @settings(max_examples=300)
    @given(st.integers(0, 2**32 - 1))
    def test_norm_preserved_and_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        s_prev, s_i, s_next = rng.normal(size=(3, 3))
        lo = rng.uniform(0, 1.5)
        hi = rng.uniform(lo, math.pi)
        once = apply_angular_limit(s_prev, s_i, s_next, (lo, hi))
        assert abs(np.linalg.norm(once - s_i) - np.linalg.norm(s_next - s_i)) <= 1e-12
        twice = apply_angular_limit(s_prev, s_i, once, (lo, hi))
        assert np.allclose(twice, once, atol=1e-12)
        theta = geom.angle_between(s_i - s_prev, once - s_i)
        assert lo - 1e-9 <= theta <= hi + 1e-9


class TestSignedHinge:
    def test_validation(self):
        with pytest.raises(ChainError):
            revolute((-1.0, 1.0), signed=True)  # no hinge
        with pytest.raises(ChainError):
            spherical((-1.0, 1.0))
        assert revolute((-2.0, -1.0), hinge=(0, 0, 1), signed=True).angle_bounds == (-2.0, -1.0)

    def test_clamps_onto_bound(self):
        (p, clamped) = _reach_py.hinge_limit([1, 0, 0], [0, 0, 0], [0, -1, 0], [0, 0, 1], 0.5, 1.0)
        assert clamped
        assert np.allclose(p, [math.cos(0.5), math.sin(0.5), 0], atol=1e-15)

    def test_inside_unchanged(self):
        p, clamped = _reach_py.hinge_limit([1, 0, 0], [0, 0, 0], [0.5, 0.8, 0], [0, 0, 1], 0.5, 1.5)
        assert not clamped and p == [0.5, 0.8, 0]

    def test_axial_component_kept(self):
        p, _ = _reach_py.hinge_limit([1, 0, 0], [0, 0, 0], [0, -1, 2], [0, 0, 1], 0.5, 1.0)
        assert p[2] == pytest.approx(2.0) and math.hypot(p[0], p[1]) == pytest.approx(1.0)

    def test_bending_side_is_kept(self):
        # a two-link planar arm bending counter-clockwise may not swing to the other side
        c = SerialChain([[0, 0, 0], [0, 1, 0], [-0.7, 1.7, 0]],
                        [revolute(), revolute((0.3, 2.5), hinge=(0, 0, 1), signed=True), revolute()])
        for t in ([1.2, 1.2, 0], [0.3, 1.9, 0], [1.5, 0.2, 0], [0, 2.5, 0]):
            out, _ = solve_serial(c, t)
            a = out.positions[1] - out.positions[0]
            b = out.positions[2] - out.positions[1]
            turn = math.atan2(np.cross(a, b)[2], a @ b)
            assert 0.3 - 1e-9 <= turn <= 2.5 + 1e-9


class TestPrismaticCheck:
    def test_within(self):
        assert check_prismatic(1.5, (1, 2)) == (True, 1.5)

    def test_upper(self):
        assert check_prismatic(2.5, (1, 2)) == (False, 2.0)

    def test_lower(self):
        assert check_prismatic(0.5, (1, 2)) == (False, 1.0)

    def test_bad_bounds(self):
        with pytest.raises(geom.InvalidBoundsError):
            check_prismatic(1.0, (2, 1))


class TestSolveSerial:
    def test_planar_target_converges(self):
        out, res = solve_serial(straight(4), [1.5, 1.5])
        tip = out.positions[-1]
        assert res.converged and res.iterations <= 100
        assert np.linalg.norm(tip - [1.5, 1.5, 0]) <= 1e-2
        assert res.residuals[0] == pytest.approx(np.linalg.norm(tip - [1.5, 1.5, 0]))

    def test_unreachable_straightens(self):
        out, res = solve_serial(straight(4), [5, 1, 0])
        assert not res.reachable and not res.converged
        assert res.residuals[0] == pytest.approx(math.hypot(5, 1) - 3, abs=1e-6)
        direction = np.array([5, 1, 0]) / math.hypot(5, 1)
        assert np.allclose(out.positions[-1], 3 * direction)

    def test_fixed_point(self):
        out, res = solve_serial(straight(4), [3, 0, 0])
        assert res.iterations == 0 and res.residuals[0] == 0.0

    def test_invalid_config(self):
        with pytest.raises(InvalidConfigError):
            SolverConfig(tolerance=0)
        with pytest.raises(InvalidConfigError):
            SolverConfig(max_iter=0)
        with pytest.raises(InvalidConfigError):
            SolverConfig(max_atp_rounds=-1)

    def test_revolute_hinge_keeps_plane(self):
        c = SerialChain([[0, 0, 0], [0, 1, 0], [0, 2, 0]],
                        [revolute((0, math.pi / 2), axis=(0, 1, 0), hinge=(0, 0, 1)), revolute(), revolute()])
        out, res = solve_serial(c, [0.5, 1.2, 0.4])
        assert abs(out.positions[1][2]) <= 1e-12

    @settings(max_examples=200)
    @given(random_chains())
    def test_link_lengths_preserved(self, case):
        c, t = case
        out, _ = solve_serial(c, t)
        check_links(c, out.positions)

    @settings(max_examples=100)
    @given(random_chains(prismatic_ok=False))
    def test_residual_non_increasing(self, case):
        c, t = case
        if np.linalg.norm(t) > c.max_reach()[0]:
            return
        prev = math.inf
        for k in range(1, 15):
            _, res = solve_serial(c, t, SolverConfig(max_iter=k))
            assert res.residuals[0] <= prev + 1e-9
            prev = res.residuals[0]
