"""Pure-Python implementations of the hot kernels.

Selected at import time by :mod:`stageopt.kernels` when the compiled
extension is unavailable.  Semantics (including tie-breaking) match the
compiled versions bit for bit.
"""

from __future__ import annotations

import heapq

import numpy as np

from stageopt.errors import NoSolutionError


def ipa_assign(lat: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Greedy best-latency-first assignment of matrix rows to columns.

    Repeatedly picks the row whose best achievable latency over the still
    available columns is largest (tie: lowest row), sends it to that column
    (tie: lowest column), and re-derives best latencies only when a column's
    capacity hits zero.
    """
    m, n = lat.shape
    caps = np.asarray(beta, dtype=np.int64).copy()
    if len(caps) != n:
        raise ValueError("beta length must match the number of columns")
    masked = np.array(lat, dtype=np.float64)
    masked[:, caps <= 0] = np.inf
    best_j = masked.argmin(axis=1)
    best_v = masked[np.arange(m), best_j]
    remaining = np.ones(m, dtype=bool)
    out = np.empty(m, dtype=np.int64)
    for _ in range(m):
        cand = np.where(remaining, best_v, -np.inf)
        i = int(cand.argmax())
        if not np.isfinite(cand[i]):
            raise NoSolutionError("machines exhausted with instances remaining")
        j = int(best_j[i])
        out[i] = j
        remaining[i] = False
        caps[j] -= 1
        if caps[j] == 0:
            masked[:, j] = np.inf
            stale = remaining & (best_j == j)
            if stale.any():
                sub = masked[stale]
                arg = sub.argmin(axis=1)
                best_j[stale] = arg
                best_v[stale] = sub[np.arange(len(arg)), arg]
    return out


def raa_path_walk(
    lat: np.ndarray, cost: np.ndarray, offsets: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Heap walk over per-instance frontiers emitting the stage frontier.

    `lat[offsets[i]:offsets[i+1]]` must be strictly decreasing and the
    matching `cost` slice strictly increasing.  Returns emitted latencies,
    emitted costs, the number of applied advances before each emission, and
    the advance sequence itself (instance index per advance), from which any
    emitted state can be reconstructed.
    """
    offs = np.asarray(offsets, dtype=np.int64)
    m = len(offs) - 1
    pos = offs[:-1].copy()
    total_cost = 0.0  # sequential, to stay bit-identical with the compiled walk
    for i in range(m):
        total_cost += float(cost[pos[i]])
    heap = [(-float(lat[pos[i]]), i) for i in range(m)]
    heapq.heapify(heap)
    emit_lat: list[float] = []
    emit_cost: list[float] = []
    emit_adv: list[int] = []
    adv_seq: list[int] = []
    smax = np.inf
    applied = 0
    while True:
        neg, i = heapq.heappop(heap)
        q = -neg
        if q < smax:
            emit_lat.append(q)
            emit_cost.append(total_cost)
            emit_adv.append(applied)
            smax = q
        nxt = pos[i] + 1
        if nxt >= offs[i + 1]:
            break
        total_cost += float(cost[nxt]) - float(cost[pos[i]])
        pos[i] = nxt
        adv_seq.append(i)
        applied += 1
        heapq.heappush(heap, (-float(lat[nxt]), i))
    return (
        np.array(emit_lat, dtype=np.float64),
        np.array(emit_cost, dtype=np.float64),
        np.array(emit_adv, dtype=np.int64),
        np.array(adv_seq, dtype=np.int64),
    )


def bruteforce_placement(lat: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, float]:
    """Exhaustive min-max assignment with capacity limits.

    Branch-and-bound over all capacity-respecting assignments finds the
    optimal stage latency; a second lexicographic pass reconstructs the
    smallest assignment achieving it.
    """
    lat = np.asarray(lat, dtype=np.float64)
    m, n = lat.shape
    caps0 = np.asarray(beta, dtype=np.int64)
    if int(caps0.sum()) < m:
        raise NoSolutionError("total capacity below instance count")

    order = np.argsort(-lat.min(axis=1), kind="stable")
    mach_order = np.argsort(lat, axis=1, kind="stable")
    best = np.inf
    caps = caps0.copy()

    def search(t: int, cur_max: float) -> None:
        nonlocal best
        if t == m:
            best = cur_max
            return
        i = order[t]
        for j in mach_order[i]:
            if caps[j] <= 0:
                continue
            v = lat[i, j]
            nm = cur_max if cur_max >= v else v
            if nm >= best:
                break  # machines are latency-sorted; later ones are no better
            caps[j] -= 1
            search(t + 1, nm)
            caps[j] += 1

    search(0, 0.0)

    assign = np.full(m, -1, dtype=np.int64)
    caps = caps0.copy()

    def rebuild(i: int) -> bool:
        if i == m:
            return True
        for j in range(n):
            if caps[j] > 0 and lat[i, j] <= best:
                caps[j] -= 1
                assign[i] = j
                if rebuild(i + 1):
                    return True
                caps[j] += 1
        assign[i] = -1
        return False

    rebuild(0)
    return assign, float(best)
