#!/usr/bin/env python3
"""Benchmark the compiled rasterization kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from eyeseg_eval import _core_py

try:
    from eyeseg_eval import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    w, h = 640, 480
    ellipses = [
        (rng.uniform(0, w), rng.uniform(0, h), rng.uniform(10, 120), rng.uniform(10, 120), rng.uniform(0, math.pi))
        for _ in range(50)
    ]
    polys = []
    for _ in range(50):
        n = int(rng.integers(5, 14))
        ang = np.sort(rng.uniform(0, 2 * math.pi, n))
        r = rng.uniform(40, 200, n)
        polys.append((320 + r * np.cos(ang), 240 + r * np.sin(ang)))

    def run_ellipses(mod):
        for cx, cy, a, b, th in ellipses:
            mod.ellipse_mask(cx, cy, a, b, th, w, h)

    def run_polygons(mod):
        for xs, ys in polys:
            mod.polygon_mask(xs, ys, w, h)

    return [
        ("ellipse_mask 640x480 x50", run_ellipses),
        ("polygon_mask 640x480 x50", run_polygons),
    ]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"{'kernel':<28} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, fn in workloads():
        t_py = timeit(lambda: fn(_core_py), args.repeats)
        if _core is None:
            print(f"{name:<28} {t_py * 1e3:9.1f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_cy = timeit(lambda: fn(_core), args.repeats)
        print(f"{name:<28} {t_py * 1e3:9.1f}ms {t_cy * 1e3:8.1f}ms {t_py / t_cy:7.2f}x")
    if _core is None:
        print("compiled extension not built; showing fallback only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
