#!/usr/bin/env python3
"""Compare the compiled kernel backend against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--size N] [--repeat K]

Times the three hot kernels (uniform stream, normal quantile, Poisson
draws in both regimes) and one full simulated-panel pipeline, verifying
along the way that both backends produce bit-identical output.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import taylorlaw.kernels as kernels
from taylorlaw.kernels import stream
from taylorlaw.simulation import DgpSpec, generate_panel


def best_of(repeat, fn, *args):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if not kernels.HAVE_CYTHON:
        print("compiled backend not built; nothing to compare")
        return

    nb = kernels.numpy_backend
    cb = kernels.cython_backend
    m = args.size
    seed = stream.derive(123)
    seeds = nb.bits(seed, 0, m)
    p = nb.uniforms(seed, 0, m)
    rates_small = np.full(m, 2.5)
    rates_big = np.full(m, 16.5)

    cases = [
        ("uniforms", lambda b: b.uniforms(seed, 0, m)),
        ("normal_quantile", lambda b: b.normal_quantile_vec(p)),
        ("poisson rate=2.5", lambda b: b.poisson_draws(seeds, rates_small, 0)),
        ("poisson rate=16.5", lambda b: b.poisson_draws(seeds, rates_big, 0)),
    ]
    print(f"size = {m:,}, best of {args.repeat}")
    print(f"{'kernel':20s} {'numpy':>10s} {'cython':>10s} {'speedup':>8s}  identical")
    for label, fn in cases:
        t_np, out_np = best_of(args.repeat, fn, nb)
        t_cy, out_cy = best_of(args.repeat, fn, cb)
        same = np.array_equal(np.asarray(out_np), np.asarray(out_cy))
        print(f"{label:20s} {t_np:9.3f}s {t_cy:9.3f}s {t_np / t_cy:7.2f}x  {same}")

    dgp = DgpSpec("poisson_mixture")
    for backend_name in ("numpy", "cython"):
        kernels.set_backend(backend_name)
        t, panel = best_of(args.repeat, generate_panel, dgp, 200, 100, 7)
        print(f"panel poisson_mixture 200x100 [{backend_name:6s}] {t:9.3f}s")
    kernels.set_backend("cython")


if __name__ == "__main__":
    main()
