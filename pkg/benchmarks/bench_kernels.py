"""Numba kernels vs their pure-numpy twins.

Each backend runs in its own subprocess because the backend is fixed at
import time by POISSONLAB_PURE_NUMPY. Timings are best-of-N wall clock after
one warm-up call (which also pays the JIT compile for numba).

    python benchmarks/bench_kernels.py [--repeat 5] [--n 20000]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def worker(n, repeat):
    from poissonlab._accel import backend_name
    from poissonlab.spatial import build_grid, nearest_neighbors
    from poissonlab.voronoi import circumradii_2d, estimate_p_k

    rng = np.random.default_rng(0)
    pts = rng.random((n, 2))
    grid = build_grid(pts)
    inner = np.flatnonzero(np.all((pts > 0.1) & (pts < 0.9), axis=1))
    nn, _ = nearest_neighbors(grid, inner, 2)
    cap = 4.0 / np.sqrt(n)  # a few mean spacings, as in the tessellation screens
    out = {"backend": backend_name(), "n_points": n}
    out["nearest_neighbors"] = _best(lambda: nearest_neighbors(grid, inner, 2), repeat)
    out["circumradii_2d"] = _best(
        lambda: circumradii_2d(pts, inner, 0.5 * nn, cap, double_up=False, grid=grid), repeat)
    out["estimate_p_k"] = _best(lambda: estimate_p_k(2, 3, 200_000, 1), repeat)
    r_numba = circumradii_2d(pts, inner[:200], 0.5 * nn[:200], cap, double_up=False, grid=grid)[0]
    out["checksum"] = float(np.sum(r_numba))
    print(json.dumps(out))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.n, args.repeat)
        return
    results = []
    for flag in ("0", "1"):
        env = dict(os.environ, POISSONLAB_PURE_NUMPY=flag)
        proc = subprocess.run([sys.executable, __file__, "--worker", "--n", str(args.n),
                               "--repeat", str(args.repeat)],
                              env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(proc.stdout.strip().splitlines()[-1]))
    fast, slow = results
    print(f"{'kernel':<20}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for key in ("nearest_neighbors", "circumradii_2d", "estimate_p_k"):
        print(f"{key:<20}{fast[key]:>12.4f}{slow[key]:>12.4f}{slow[key] / fast[key]:>9.1f}x")
    # 200 radii, each bisected to 1e-10
    same = abs(fast["checksum"] - slow["checksum"]) < 200 * 1e-10
    print(f"circumradius checksums agree: {same}")


if __name__ == "__main__":
    main()
