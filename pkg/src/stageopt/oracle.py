"""Independent brute-force references backing the property tests.

Both operations enumerate exhaustively behind hard size guards; they are
deliberately separate from the greedy and heap-walk solvers they check.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from stageopt import kernels
from stageopt.errors import ContractViolation, NoSolutionError, SizeGuardExceeded
from stageopt.model import (
    AggregatorSpec,
    LatencyMatrix,
    ObjectiveVector,
    ParetoSet,
    PlacementPlan,
)

MAX_BRUTE_INSTANCES = 9
MAX_BRUTE_MACHINES = 10
MAX_BRUTE_STATES = 10**6

State = tuple[int, ...]


def brute_force_placement(
    latencies: LatencyMatrix, beta: Sequence[int]
) -> tuple[PlacementPlan, float]:
    """Optimal min-max assignment by exhaustive search (small inputs only).

    Ties between optimal assignments resolve to the lexicographically
    smallest one (instance order, then machine id).
    """
    m, n = latencies.shape
    if m > MAX_BRUTE_INSTANCES or n > MAX_BRUTE_MACHINES:
        raise SizeGuardExceeded(
            f"{m}x{n} exceeds the {MAX_BRUTE_INSTANCES}x{MAX_BRUTE_MACHINES} search guard"
        )
    caps = np.asarray(list(beta), dtype=np.int64)
    if len(caps) != n:
        raise ContractViolation(f"beta has {len(caps)} entries for {n} machines")
    if int(caps.sum()) < m:
        raise NoSolutionError(f"total capacity {int(caps.sum())} < {m} instances")
    assign, value = kernels.bruteforce_placement(latencies.values, caps)
    pairs = tuple(
        (latencies.instance_ids[i], latencies.machine_ids[int(assign[i])]) for i in range(m)
    )
    return PlacementPlan(pairs), value


def non_dominated_mask(points: np.ndarray) -> np.ndarray:
    """Boolean mask of the non-dominated rows; duplicate rows keep the first.

    Scans rows in lexicographic order so a row only needs checking against
    the frontier found so far.
    """
    pts = np.asarray(points, dtype=np.float64)
    n, k = pts.shape
    uniq, first = np.unique(pts, axis=0, return_index=True)
    kept = np.empty_like(uniq)
    kcount = 0
    mask = np.zeros(n, dtype=bool)
    for r in range(len(uniq)):
        f = uniq[r]
        if kcount:
            frontier = kept[:kcount]
            if bool(((frontier <= f).all(axis=1) & (frontier < f).any(axis=1)).any()):
                continue
        kept[kcount] = f
        kcount += 1
        mask[first[r]] = True
    return mask


def brute_force_stage_pareto(
    pareto_sets: Sequence[ParetoSet], agg: AggregatorSpec
) -> list[tuple[State, ObjectiveVector]]:
    """Stage frontier by enumerating every combination of instance choices.

    Returns (state, objectives) pairs sorted by ascending objective vector,
    one representative state (the lexicographically lowest) per surviving
    vector.  States are 0-based indices into each instance's frontier.
    """
    if not pareto_sets:
        raise ContractViolation("need at least one instance frontier")
    sizes = [len(ps) for ps in pareto_sets]
    total = 1
    for p in sizes:
        total *= p
        if total > MAX_BRUTE_STATES:
            raise SizeGuardExceeded(f"state space exceeds {MAX_BRUTE_STATES}")
    m = len(pareto_sets)
    k = agg.k
    for ps in pareto_sets:
        if ps.k != k:
            raise SizeGuardExceeded(f"pareto sets must have k={k} objectives")

    values = [np.array([vec for _, vec in ps], dtype=np.float64) for ps in pareto_sets]
    agg_cols = []
    for o, tag in enumerate(agg.tags):
        acc = None
        for i in range(m):
            shape = [1] * m
            shape[i] = sizes[i]
            col = values[i][:, o].reshape(shape)
            if acc is None:
                acc = np.broadcast_to(col, sizes).copy()
            elif tag == "max":
                acc = np.maximum(acc, col)
            else:
                acc = acc + col
        agg_cols.append(acc.reshape(-1))
    stage = np.stack(agg_cols, axis=1)

    mask = non_dominated_mask(stage)
    idx = np.nonzero(mask)[0]
    states = np.stack(np.unravel_index(idx, sizes), axis=1) if m > 0 else idx
    out = [
        (tuple(int(x) for x in states[r]), ObjectiveVector(stage[idx[r]]))
        for r in range(len(idx))
    ]
    out.sort(key=lambda e: e[1])
    return out
