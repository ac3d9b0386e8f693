"""The compiled and pure-Python reaching kernels must agree bit for bit."""

import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from pfabrik import _reach_py, chain as chain_mod
from pfabrik._backend import BACKEND
from pfabrik.mechanisms import FiveBar, Nrpm, Stewart
from pfabrik.model import TargetPose
from pfabrik.geom import rpy

try:
    from pfabrik import _reach_c
except ImportError:  # extension not built
    _reach_c = None

needs_ext = pytest.mark.skipif(_reach_c is None, reason="compiled extension not built")


def kernels_for(module, chains, monkeypatch):
    monkeypatch.setattr(chain_mod, "reach", module)
    return [c._build_kernel() for c in chains]


def run(module, mech, pose, monkeypatch, max_iter=100):
    chains = mech.sub_chains()
    ks = kernels_for(module, chains, monkeypatch)
    sub = mech.sub_targets(pose)
    counts = np.cumsum([0] + [len(c.leaves) for c in chains])
    T = [np.ascontiguousarray(sub.positions[a:b]) for a, b in zip(counts[:-1], counts[1:])]
    A = [np.ascontiguousarray(sub.axes[a:b]) for a, b in zip(counts[:-1], counts[1:])]
    P = [c.positions.copy() for c in chains]
    k, conv, res = module.iterate(ks, P, T, A, 1e-2, max_iter)
    return k, conv, np.asarray(res), P


def poses(mech, n, seed):
    rng = np.random.default_rng(seed)
    lo, hi = (np.asarray(b, float) for b in mech.geometry.sampling_box)
    for _ in range(n):
        p = rng.uniform(lo, hi) * 1.3  # includes out-of-workspace targets
        R = None if mech.planar else rpy(*rng.uniform(-0.1, 0.1, 3))
        if mech.planar:
            p[2] = 0.0
        yield TargetPose(p, R)


def test_backend_selected():
    assert BACKEND in ("cython", "python")


def test_env_forces_python():
    code = "import pfabrik; print(pfabrik.BACKEND)"
    env = dict(os.environ, PFABRIK_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.parametrize("cls", [FiveBar, Stewart, Nrpm])
def test_iterate_bitwise_parity(cls, monkeypatch):
    mech = cls()
    for pose in poses(mech, 60, 11):
        kp, cp, rp, Pp = run(_reach_py, mech, pose, monkeypatch)
        kc, cc, rc, Pc = run(_reach_c, mech, pose, monkeypatch)
        assert (kp, cp) == (kc, cc)
        assert np.array_equal(rp, rc)
        for a, b in zip(Pp, Pc):
            assert np.array_equal(a, b)


@needs_ext
def test_single_pass_parity(monkeypatch):
    mech = Nrpm()
    chains = mech.sub_chains()
    pose = next(poses(mech, 1, 5))
    sub = mech.sub_targets(pose)
    T, A = sub.positions[:2].copy(), sub.axes[:2].copy()
    outs = []
    for module in (_reach_py, _reach_c):
        k = kernels_for(module, chains[:1], monkeypatch)[0]
        P = chains[0].positions.copy()
        f = k.forward(P, T, A)
        b = k.backward(P, chains[0].base)
        outs.append((f, b, P))
    assert outs[0][0] == outs[1][0] and outs[0][1] == outs[1][1]
    assert np.array_equal(outs[0][2], outs[1][2])


@needs_ext
def test_angular_limit_parity():
    rng = np.random.default_rng(2)
    for _ in range(500):
        a, s, n = rng.normal(size=(3, 3))
        lo = rng.uniform(0, 1)
        hi = rng.uniform(lo, 3)
        (pp, fp), (pc, fc) = _reach_py.angular_limit(a, s, n, lo, hi), _reach_c.angular_limit(a, s, n, lo, hi)
        assert fp == fc
        assert np.array_equal(np.asarray(pp, dtype=float), np.asarray(pc, dtype=float))


@needs_ext
def test_hinge_limit_parity():
    rng = np.random.default_rng(4)
    for _ in range(500):
        a, s, n, h = rng.normal(size=(4, 3))
        h /= np.linalg.norm(h)
        lo = rng.uniform(-3, 1)
        hi = rng.uniform(lo, 3)
        (pp, fp), (pc, fc) = _reach_py.hinge_limit(a, s, n, h, lo, hi), _reach_c.hinge_limit(a, s, n, h, lo, hi)
        assert fp == fc
        assert np.array_equal(np.asarray(pp, dtype=float), np.asarray(pc, dtype=float))
