#!/usr/bin/env python3
"""Benchmark the compiled stencil kernels against the numpy fallback.

Usage:
    python benchmarks/bench_kernels.py [--size N] [--repeats R]
"""

import argparse
import time

import numpy as np

from barons2d import _kernels_py as kpy

try:
    from barons2d import _kernels as kc
except ImportError:
    kc = None


def _time(fn, repeats):
    fn()  # warm up
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    n = args.size
    rng = np.random.default_rng(0)
    vx = rng.standard_normal((n + 1, n))
    vy = rng.standard_normal((n, n + 1))
    p = rng.standard_normal((n, n))
    k = rng.uniform(0, 1, (n, n))
    hx = hy = 1.0 / n
    coeffs = kpy.upwind_coeffs(vx, vy, k, False)
    fluxes = kpy.mass_flux(*coeffs, p, False)

    cases = [
        ("divergence", lambda m: m.divergence(vx, vy, hx, hy, False)),
        ("gradient", lambda m: m.gradient(p, hx, hy, False)),
        ("lap_neumann", lambda m: m.lap_neumann(p, hx, hy, False)),
        ("curl_nodes", lambda m: m.curl_nodes(vx, vy, hx, hy, False)),
        ("d12_nodes", lambda m: m.d12_nodes(vx, vy, hx, hy, False)),
        ("vel_sq_cells", lambda m: m.vel_sq_cells(vx, vy, False)),
        ("upwind_coeffs", lambda m: m.upwind_coeffs(vx, vy, k, False)),
        ("mass_flux", lambda m: m.mass_flux(*coeffs, p, False)),
        ("momentum_convection",
         lambda m: m.momentum_convection(*fluxes, vx, vy, hx, hy, False)),
    ]

    print(f"grid {n}x{n}, best of {args.repeats}")
    header = f"{'kernel':<22}{'numpy [ms]':>12}"
    if kc is not None:
        header += f"{'compiled [ms]':>15}{'speedup':>9}"
    print(header)
    for name, call in cases:
        t_py = _time(lambda: call(kpy), args.repeats) * 1e3
        line = f"{name:<22}{t_py:>12.3f}"
        if kc is not None:
            t_c = _time(lambda: call(kc), args.repeats) * 1e3
            line += f"{t_c:>15.3f}{t_py / t_c:>9.2f}"
        print(line)
    if kc is None:
        print("compiled extension not available; numpy timings only")


if __name__ == "__main__":
    main()
