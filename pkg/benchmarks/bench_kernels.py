"""Compare the compiled and pure-Python reaching kernels.

Each backend runs in its own interpreter (``PFABRIK_PURE_PYTHON=1`` selects the
fallback) on the same random in-workspace targets, solved from home.

    python3 benchmarks/bench_kernels.py [--targets 200] [--seed 0]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import pfabrik
from pfabrik._backend import reach
from pfabrik.harness.experiments import sample_targets
from pfabrik.mechanisms import FiveBar, Nrpm, Stewart
from pfabrik.solver import solve

PASSES = 20
n, seed = int(sys.argv[1]), int(sys.argv[2])
result = {"backend": pfabrik.BACKEND}
for cls in (FiveBar, Stewart, Nrpm):
    m = cls()
    targets = sample_targets(m, n, seed)
    solve(m, targets[0])
    t0 = time.perf_counter()
    for t in targets:
        solve(m, t)
    solve_ms = (time.perf_counter() - t0) * 1e3 / n
    # kernel alone: a negative tolerance forces exactly PASSES iterations per target
    chains = m.sub_chains()
    kernels = [c.kernel for c in chains]
    counts = np.cumsum([0] + [len(c.leaves) for c in chains])
    t0 = time.perf_counter()
    for t in targets:
        sub = m.sub_targets(t)
        T = [sub.positions[a:b] for a, b in zip(counts[:-1], counts[1:])]
        A = [sub.axes[a:b] for a, b in zip(counts[:-1], counts[1:])]
        P = [c.positions.copy() for c in chains]
        reach.iterate(kernels, P, T, A, -1.0, PASSES)
    us_iter = (time.perf_counter() - t0) * 1e6 / (n * PASSES)
    result[m.kind] = {"ms_per_solve": solve_ms, "us_per_iteration": us_iter}
print(json.dumps(result))
"""


def run(pure: bool, n: int, seed: int) -> dict:
    env = dict(os.environ)
    env.pop("PFABRIK_PURE_PYTHON", None)
    if pure:
        env["PFABRIK_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, str(n), str(seed)],
                         env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--targets", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    fast, slow = run(False, args.targets, args.seed), run(True, args.targets, args.seed)
    if fast["backend"] != "cython":
        sys.exit("compiled kernel unavailable; build with `pip install -e . --no-build-isolation`")
    for key, label in (("ms_per_solve", "full solve, ms"), ("us_per_iteration", "kernel iteration, us")):
        print(f"{label:<22} {'cython':>9} {'python':>9} {'speedup':>8}")
        for kind in ("five_bar", "stewart", "nrpm"):
            a, b = fast[kind][key], slow[kind][key]
            print(f"  {kind:<20} {a:>9.3f} {b:>9.3f} {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
