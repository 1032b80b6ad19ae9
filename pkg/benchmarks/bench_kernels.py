#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Run after an editable install:

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so results are side by side regardless
of which one stageopt.kernels selected.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from stageopt import _pure

try:
    from stageopt import _native
except ImportError:
    _native = None


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def make_placement_input(rng, m: int, n: int, column_order: bool = True):
    if column_order:
        inst = rng.uniform(1.0, 100.0, size=m)
        mach = rng.uniform(0.5, 5.0, size=n)
        lat = np.outer(inst, mach)
    else:
        lat = rng.uniform(1.0, 500.0, size=(m, n))
    beta = np.full(n, max(1, (m + n - 1) // n + 1), dtype=np.int64)
    return lat, beta


def make_walk_input(rng, m: int, p: int):
    lats = np.sort(rng.uniform(1, 1000, size=(m, p)), axis=1)[:, ::-1].ravel()
    costs = np.sort(rng.uniform(1, 1000, size=(m, p)), axis=1).ravel()
    offsets = np.arange(0, (m + 1) * p, p, dtype=np.int64)
    return np.ascontiguousarray(lats), np.ascontiguousarray(costs), offsets


def make_bruteforce_inputs(rng, cases: int):
    out = []
    for _ in range(cases):
        m = int(rng.integers(4, 8))
        n = int(rng.integers(m, 10))
        lat, beta = make_placement_input(rng, m, n)
        out.append((lat, beta))
    return out


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    lat_rand, beta_rand = make_placement_input(rng, 1000, 1000, column_order=False)
    lat_co, beta_co = make_placement_input(rng, 64, 4000, column_order=True)
    walk_args = make_walk_input(rng, 5000, 10)
    brute_cases = make_bruteforce_inputs(rng, 100)

    benches = [
        ("ipa_assign 1000x1000 random", lambda mod: mod.ipa_assign(lat_rand, beta_rand)),
        ("ipa_assign 64x4000 column-order", lambda mod: mod.ipa_assign(lat_co, beta_co)),
        ("raa_path_walk m=5000 p=10", lambda mod: mod.raa_path_walk(*walk_args)),
        (
            "bruteforce_placement 100 cases",
            lambda mod: [mod.bruteforce_placement(l, b) for l, b in brute_cases],
        ),
    ]

    print(f"{'kernel':<34} {'pure':>10} {'native':>10} {'speedup':>9}")
    for name, call in benches:
        pure_t = best_of(lambda: call(_pure), args.repeat)
        if _native is not None:
            native_t = best_of(lambda: call(_native), args.repeat)
            print(f"{name:<34} {pure_t * 1e3:>8.1f}ms {native_t * 1e3:>8.1f}ms "
                  f"{pure_t / native_t:>8.1f}x")
        else:
            print(f"{name:<34} {pure_t * 1e3:>8.1f}ms {'n/a':>10} {'n/a':>9}")

    if _native is not None:
        a = _native.raa_path_walk(*walk_args)
        b = _pure.raa_path_walk(*walk_args)
        assert all((x == y).all() for x, y in zip(a, b)), "backend outputs diverge"
        print("outputs identical across backends")


if __name__ == "__main__":
    main()
