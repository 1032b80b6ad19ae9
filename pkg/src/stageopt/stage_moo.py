"""Stage-level multi-objective composition of per-instance frontiers.

Two solvers: a general one handling any mix of max- and sum-aggregated
objectives by enumerating candidate stage maxima and weighted-sum selection,
and a fast heap walk for the (max latency, sum cost) special case that emits
the complete stage frontier in strictly decreasing latency order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from stageopt import kernels
from stageopt.errors import ContractViolation
from stageopt.model import AggregatorSpec, ObjectiveVector, ParetoSet, StageSolution

State = tuple[int, ...]

_WEIGHT_TOL = 1e-9


def default_weight_vectors(k2: int) -> tuple[tuple[float, ...], ...]:
    """Evenly spread weight vectors on the simplex: 11 points for two
    sum objectives, a step-0.25 lattice beyond that."""
    if k2 < 1:
        raise ContractViolation("need at least one sum objective for weighting")
    if k2 == 1:
        return ((1.0,),)
    if k2 == 2:
        return tuple((round(t * 0.1, 1), round(1 - t * 0.1, 1)) for t in range(11))
    steps = 4  # quarters
    out = []
    for combo in itertools.product(range(steps + 1), repeat=k2):
        if sum(combo) == steps:
            out.append(tuple(c / steps for c in combo))
    return tuple(out)


@dataclass(frozen=True)
class HierarchicalProblem:
    """m instance frontiers, their aggregators, and the weight schedule."""

    pareto_sets: tuple[ParetoSet, ...]
    agg: AggregatorSpec
    weights: tuple[tuple[float, ...], ...] = ()
    _flat: np.ndarray = field(init=False, repr=False, compare=False)
    _offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pareto_sets", tuple(self.pareto_sets))
        if not self.pareto_sets:
            raise ContractViolation("need at least one instance frontier")
        k = self.agg.k
        for i, ps in enumerate(self.pareto_sets):
            if ps.k != k:
                raise ContractViolation(f"frontier {i} has k={ps.k}, aggregators expect {k}")
        weights = self.weights or (default_weight_vectors(self.agg.k2) if self.agg.k2 else ())
        for w in weights:
            if len(w) != self.agg.k2:
                raise ContractViolation(f"weight vector {w} must have k2={self.agg.k2} entries")
            if any(x < 0 for x in w):
                raise ContractViolation(f"weight vector {w} must be non-negative")
            if abs(sum(w) - 1.0) > _WEIGHT_TOL:
                raise ContractViolation(f"weight vector {w} must sum to 1")
        object.__setattr__(self, "weights", tuple(tuple(w) for w in weights))
        sizes = [len(ps) for ps in self.pareto_sets]
        offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
        np.cumsum(sizes, out=offsets[1:])
        flat = np.empty((int(offsets[-1]), k), dtype=np.float64)
        for i, ps in enumerate(self.pareto_sets):
            flat[offsets[i] : offsets[i + 1]] = ps.vectors()
        object.__setattr__(self, "_flat", flat)
        object.__setattr__(self, "_offsets", offsets)

    @property
    def m(self) -> int:
        return len(self.pareto_sets)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(ps) for ps in self.pareto_sets)

    def values_of(self, i: int) -> np.ndarray:
        """(p_i, k) objective values of instance i's frontier."""
        return self._flat[self._offsets[i] : self._offsets[i + 1]]


def aggregate(per_instance: Sequence[Sequence[float]], agg: AggregatorSpec) -> ObjectiveVector:
    """Componentwise max or sum of the instance objective vectors."""
    vecs = [ObjectiveVector(v) for v in per_instance]
    if not vecs:
        raise ContractViolation("nothing to aggregate")
    for v in vecs:
        if v.k != agg.k:
            raise ContractViolation(f"vector has k={v.k}, aggregators expect {agg.k}")
    out = []
    for o, tag in enumerate(agg.tags):
        col = [v[o] for v in vecs]
        out.append(max(col) if tag == "max" else math.fsum(col))
    return ObjectiveVector(out)


def _aggregate_rows(rows: np.ndarray, agg: AggregatorSpec) -> ObjectiveVector:
    out = []
    for o, tag in enumerate(agg.tags):
        col = rows[:, o]
        out.append(float(col.max()) if tag == "max" else math.fsum(float(x) for x in col))
    return ObjectiveVector(out)


def find_all_possible_values(problem: HierarchicalProblem, objective: int) -> list[float]:
    """Candidate stage-level values of a max-aggregated objective.

    These are the distinct frontier values every instance can stay under,
    i.e. those at or above the largest per-instance minimum; ascending.
    """
    if problem.agg.tags[objective] != "max":
        raise ContractViolation(f"objective {objective} is not max-aggregated")
    cols = [problem.values_of(i)[:, objective] for i in range(problem.m)]
    lower = max(float(c.min()) for c in cols)
    vals = {float(v) for c in cols for v in c if v >= lower}
    return sorted(vals)


def find_optimal(
    problem: HierarchicalProblem,
    max_bounds: Sequence[float],
    weight: Sequence[float],
) -> tuple[State, ObjectiveVector] | None:
    """Best state under per-objective maxima, by weighted sum of the
    sum-aggregated objectives.

    Picks, per instance, the frontier entry whose max objectives all fit the
    bounds and whose weighted sum is smallest (tie: lowest index); the
    returned vector re-aggregates the actual selections, so max components
    are achieved values, not the bounds.  None when some instance has no
    entry within bounds.
    """
    agg = problem.agg
    if len(max_bounds) != agg.k1:
        raise ContractViolation(f"expected {agg.k1} bounds, got {len(max_bounds)}")
    if len(weight) != agg.k2:
        raise ContractViolation(f"expected {agg.k2} weights, got {len(weight)}")
    if abs(sum(weight) - 1.0) > _WEIGHT_TOL:
        raise ContractViolation("weights must sum to 1")
    bounds = np.asarray(max_bounds, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    max_idx = list(agg.max_indices)
    sum_idx = list(agg.sum_indices)

    state = []
    chosen = []
    for i in range(problem.m):
        vals = problem.values_of(i)
        ok = np.ones(len(vals), dtype=bool)
        if max_idx:
            ok = (vals[:, max_idx] <= bounds).all(axis=1)
        if not ok.any():
            return None
        score = vals[:, sum_idx] @ w if sum_idx else np.zeros(len(vals))
        j = int(np.where(ok, score, np.inf).argmin())
        state.append(j)
        chosen.append(vals[j])
    return tuple(state), _aggregate_rows(np.array(chosen), agg)


def general_hierarchical_moo(
    problem: HierarchicalProblem,
) -> list[tuple[State, ObjectiveVector]]:
    """Stage frontier for any max/sum aggregator mix.

    Walks the Cartesian product of candidate values for every max objective,
    runs the weighted-sum selection for each weight vector, then keeps the
    non-dominated results (first state wins on identical vectors); sorted by
    ascending objective vector.
    """
    if problem.agg.k2 == 0:
        raise ContractViolation("need at least one sum objective (k2 >= 1)")
    value_lists = [find_all_possible_values(problem, h) for h in problem.agg.max_indices]
    collected: list[tuple[State, ObjectiveVector]] = []
    for bounds in itertools.product(*value_lists):
        for w in problem.weights:
            res = find_optimal(problem, bounds, w)
            if res is not None:
                collected.append(res)
    best: dict[ObjectiveVector, State] = {}
    for state, vec in collected:
        if vec not in best:
            best[vec] = state
    survivors = []
    vecs = list(best.keys())
    for vec in vecs:
        if not any(_dominates_vec(o, vec) for o in vecs if o is not vec):
            survivors.append((best[vec], vec))
    survivors.sort(key=lambda e: e[1])
    return survivors


def _dominates_vec(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


class RaaPathResult(Sequence[tuple[State, ObjectiveVector]]):
    """Emitted stage frontier of the heap walk.

    Objectives are materialized; states are delta-encoded and rebuilt on
    demand, so a walk over huge inputs stays within the advertised
    O((m + sum p_i) log m) budget until a state is actually requested.
    """

    def __init__(
        self,
        m: int,
        lats: np.ndarray,
        costs: np.ndarray,
        emit_adv: np.ndarray,
        adv_seq: np.ndarray,
    ):
        self._m = m
        self._lats = lats
        self._costs = costs
        self._emit_adv = emit_adv
        self._adv_seq = adv_seq

    def __len__(self) -> int:
        return len(self._lats)

    def objective(self, t: int) -> ObjectiveVector:
        return ObjectiveVector((self._lats[t], self._costs[t]))

    @property
    def objectives_array(self) -> np.ndarray:
        """(T, 2) array of emitted (latency, cost) rows."""
        return np.stack([self._lats, self._costs], axis=1)

    def state(self, t: int) -> State:
        pos = np.zeros(self._m, dtype=np.int64)
        np.add.at(pos, self._adv_seq[: self._emit_adv[t]], 1)
        return tuple(int(x) for x in pos)

    def __getitem__(self, t):  # type: ignore[override]
        if isinstance(t, slice):
            return [self[i] for i in range(*t.indices(len(self)))]
        if t < 0:
            t += len(self)
        if not 0 <= t < len(self):
            raise IndexError(t)
        return self.state(t), self.objective(t)

    def __iter__(self) -> Iterator[tuple[State, ObjectiveVector]]:
        pos = np.zeros(self._m, dtype=np.int64)
        done = 0
        for t in range(len(self)):
            upto = int(self._emit_adv[t])
            for a in self._adv_seq[done:upto]:
                pos[a] += 1
            done = upto
            yield tuple(int(x) for x in pos), self.objective(t)


def raa_path(problem: HierarchicalProblem) -> RaaPathResult:
    """Complete stage frontier for (max latency, sum cost) by a single heap
    walk: pop the binding instance, emit whenever the stage latency drops,
    advance that instance down its frontier, stop when one runs out.

    Emitted latencies strictly decrease and costs strictly increase.
    """
    agg = problem.agg
    if agg.tags != ("max", "sum"):
        raise ContractViolation(f"requires aggregators (max, sum), got {agg.tags}")
    lat = np.ascontiguousarray(problem._flat[:, 0])
    cost = np.ascontiguousarray(problem._flat[:, 1])
    lats, costs, emit_adv, adv_seq = kernels.raa_path_walk(lat, cost, problem._offsets)
    return RaaPathResult(problem.m, lats, costs, emit_adv, adv_seq)


def solution_at(problem: HierarchicalProblem, state: State) -> StageSolution:
    """Concrete per-instance plan for a state: the frontier tags (resource
    configs) it selects, paired with the re-aggregated objectives."""
    if len(state) != problem.m:
        raise ContractViolation(f"state has {len(state)} entries for m={problem.m}")
    configs = []
    rows = []
    for i, j in enumerate(state):
        ps = problem.pareto_sets[i]
        if not 0 <= j < len(ps):
            raise ContractViolation(f"state index {j} out of range for instance {i}")
        tag, _ = ps[j]
        configs.append(tag)
        rows.append(problem.values_of(i)[j])
    return StageSolution(tuple(configs), _aggregate_rows(np.array(rows), problem.agg))


def wun_recommend(
    solutions,
    wun_weights: Sequence[float],
    normalization: Sequence[tuple[float, float]] | None = None,
) -> int:
    """Index of the solution nearest the utopia point.

    The utopia point is the componentwise minimum over the set; objectives
    are min-max normalized (over the set unless explicit bounds are given,
    constant objectives collapse to 0) and the weighted Euclidean distance
    decides, ties going to the lowest latency then lowest index.
    """
    vecs = _vectors_of(solutions)
    if len(vecs) == 0:
        raise ContractViolation("cannot recommend from an empty set")
    w = np.asarray(wun_weights, dtype=np.float64)
    if len(w) != vecs.shape[1]:
        raise ContractViolation(f"need {vecs.shape[1]} weights, got {len(w)}")
    if (w < 0).any():
        raise ContractViolation("weights must be non-negative")
    utopia = vecs.min(axis=0)
    if normalization is None:
        lo, hi = utopia, vecs.max(axis=0)
    else:
        bounds = np.asarray(normalization, dtype=np.float64)
        if bounds.shape != (vecs.shape[1], 2):
            raise ContractViolation("normalization must give (min, max) per objective")
        lo, hi = bounds[:, 0], bounds[:, 1]
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    norm = np.where(span > 0, (vecs - lo) / safe, 0.0)
    norm_utopia = np.where(span > 0, (utopia - lo) / safe, 0.0)
    dist = np.sqrt(((norm - norm_utopia) ** 2 @ w))
    best = np.lexsort((np.arange(len(vecs)), vecs[:, 0], dist))[0]
    return int(best)


def _vectors_of(solutions) -> np.ndarray:
    if isinstance(solutions, RaaPathResult):
        return solutions.objectives_array
    if isinstance(solutions, ParetoSet):
        return np.array(solutions.vectors(), dtype=np.float64)
    items = list(solutions)
    if not items:
        return np.empty((0, 0))
    if isinstance(items[0], tuple) and len(items[0]) == 2 and isinstance(
        items[0][1], ObjectiveVector
    ):
        return np.array([vec for _, vec in items], dtype=np.float64)
    return np.array(items, dtype=np.float64)
