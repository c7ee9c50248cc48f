"""Compiled vs numpy timings for the three hot kernels.

    python benchmarks/bench_kernels.py [--rays 2000] [--repeat 3]

Each kernel is run on identical inputs through both backends; the table
reports the best wall time, the speed-up and the largest output difference.
"""

import argparse
import math
import time

import numpy as np

from vlinetomo import _kernels_py, kernels
from vlinetomo.fields import cell_centers, random_phantom, sample_to_grid


def _segments(n, rng):
    # random chords of the unit disk, alternating longitudinal/transverse weights
    a, b = rng.uniform(0, 2 * math.pi, (2, n))
    p0 = np.stack([np.cos(a), np.sin(a)], axis=1)
    p1 = np.stack([np.cos(b), np.sin(b)], axis=1)
    e = p1 - p0
    length = np.linalg.norm(e, axis=1)
    e /= np.maximum(length, 1e-300)[:, None]
    w = e.copy()
    w[1::2] = np.stack([-e[1::2, 1], e[1::2, 0]], axis=1)
    return np.column_stack([p0, e, length, w])


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=2000)
    ap.add_argument("--step", type=float, default=0.002)
    ap.add_argument("--grid", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    fld = random_phantom(rng, "mixture", 4, 0.8)
    segs = _segments(args.rays, rng)
    grid = sample_to_grid(fld, 256, 256).values
    n_psi, n_p = 360, 257
    q = rng.normal(size=(n_psi, n_p))
    psi = 2 * math.pi * np.arange(n_psi) / n_psi
    xs = cell_centers(args.grid, 1.0)

    cases = {
        "integrate_segments (analytic)": lambda impl: kernels.integrate_segments(fld.terms, segs, args.step, impl),
        "integrate_segments_grid (256^2)": lambda impl: kernels.integrate_segments_grid(grid, 1.0, segs, args.step,
                                                                                        impl),
        f"backproject ({n_psi}x{n_p} -> {args.grid}^2)": lambda impl: kernels.backproject(
            q, psi, -1.0, 2.0 / (n_p - 1), xs, xs, impl),
    }
    compiled = kernels._impl if kernels.BACKEND == "cython" else None
    print(f"backend at import: {kernels.BACKEND}")
    print(f"{'kernel':<36} {'numpy s':>9} {'cython s':>9} {'speed-up':>9} {'max diff':>10}")
    for name, run in cases.items():
        t_py, out_py = _best(lambda: run(_kernels_py), args.repeat)
        if compiled is None:
            print(f"{name:<36} {t_py:9.3f} {'-':>9} {'-':>9} {'-':>10}")
            continue
        t_c, out_c = _best(lambda: run(compiled), args.repeat)
        diff = float(np.max(np.abs(out_c - out_py)))
        print(f"{name:<36} {t_py:9.3f} {t_c:9.3f} {t_py / t_c:8.1f}x {diff:10.2e}")


if __name__ == "__main__":
    main()
