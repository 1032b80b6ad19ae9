"""Shared random-input builders for the property tests.

Integer-valued objective data keeps every float arithmetic path exact, so
equality assertions against the brute-force references stay meaningful.
"""

from __future__ import annotations

import numpy as np

from stageopt.model import AggregatorSpec, LatencyMatrix, ObjectiveVector, ParetoSet
from stageopt.stage_moo import HierarchicalProblem


def column_order_matrix(rng: np.random.Generator, m: int, n: int) -> LatencyMatrix:
    """Random positive matrix whose columns all rank rows identically, with
    all entries distinct."""
    while True:
        inst = rng.uniform(1.0, 100.0, size=m)
        mach = rng.uniform(0.5, 5.0, size=n)
        values = np.outer(inst, mach)
        if len(np.unique(values)) == m * n:
            return LatencyMatrix(values)


def mixed_beta(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """Random per-machine capacities (some zero) with total at least m."""
    beta = rng.integers(0, 3, size=n)
    while beta.sum() < m:
        beta[int(rng.integers(n))] += 1
    return beta


def strict_frontier(rng: np.random.Generator, p: int, hi: int = 1000) -> ParetoSet:
    """Two-objective frontier with strictly decreasing integer latencies and
    strictly increasing integer costs."""
    lats = np.sort(rng.choice(np.arange(1, hi), size=p, replace=False))[::-1]
    costs = np.sort(rng.choice(np.arange(1, hi), size=p, replace=False))
    return ParetoSet(
        [(j, ObjectiveVector((float(lats[j]), float(costs[j])))) for j in range(p)]
    )


def int_frontier(rng: np.random.Generator, p: int, k: int, hi: int = 100) -> ParetoSet:
    """Frontier built from random integer k-vectors (may end up shorter than
    p after dominance filtering)."""
    pts = [(j, rng.integers(1, hi, size=k).astype(float)) for j in range(p)]
    return ParetoSet.build(pts)


def dyadic_weights(rng: np.random.Generator, k2: int, denom: int = 16) -> tuple[float, ...]:
    """Random non-negative weights summing to one, exactly representable."""
    cuts = rng.multinomial(denom, np.full(k2, 1.0 / k2))
    return tuple(float(c) / denom for c in cuts)


def random_problem(
    rng: np.random.Generator,
    max_m: int = 4,
    max_p: int = 4,
    max_k: int = 4,
    n_weights: int = 2,
) -> HierarchicalProblem:
    """Random hierarchical problem with at least one sum objective."""
    m = int(rng.integers(1, max_m + 1))
    k = int(rng.integers(2, max_k + 1))
    tags = ["sum" if rng.random() < 0.5 else "max" for _ in range(k)]
    if "sum" not in tags:
        tags[int(rng.integers(k))] = "sum"
    agg = AggregatorSpec(tuple(tags))
    sets = tuple(int_frontier(rng, int(rng.integers(1, max_p + 1)), k) for _ in range(m))
    weights = tuple(dyadic_weights(rng, agg.k2) for _ in range(n_weights))
    return HierarchicalProblem(sets, agg, weights)


def random_path_problem(
    rng: np.random.Generator, max_m: int = 5, max_p: int = 5
) -> HierarchicalProblem:
    """Random strictly-sorted (max latency, sum cost) problem."""
    m = int(rng.integers(1, max_m + 1))
    sets = tuple(strict_frontier(rng, int(rng.integers(1, max_p + 1))) for _ in range(m))
    return HierarchicalProblem(sets, AggregatorSpec.of("max", "sum"))
