import numpy as np
import pytest

from helpers import column_order_matrix, mixed_beta
from stageopt.errors import NoSolutionError, SizeGuardExceeded
from stageopt.model import AggregatorSpec, LatencyMatrix, ParetoSet
from stageopt.oracle import (
    brute_force_placement,
    brute_force_stage_pareto,
    non_dominated_mask,
)

TOY = LatencyMatrix([[20.0, 48.0, 16.0], [10.0, 24.0, 8.0]])


class TestBruteForcePlacement:
    def test_toy_optimum(self):
        plan, value = brute_force_placement(TOY, [1, 1, 1])
        assert value == 16.0
        assert plan.assignment == ((0, 2), (1, 0))

    def test_single_cell(self):
        plan, value = brute_force_placement(LatencyMatrix([[3.5]]), [1])
        assert value == 3.5 and plan.assignment == ((0, 0),)

    def test_size_guard(self):
        big = LatencyMatrix(np.ones((10, 10)))
        with pytest.raises(SizeGuardExceeded):
            brute_force_placement(big, [1] * 10)

    def test_infeasible(self):
        with pytest.raises(NoSolutionError):
            brute_force_placement(TOY, [1, 0, 0])

    def test_capacity_respected(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = int(rng.integers(2, 6))
            n = int(rng.integers(m, 8))
            mat = column_order_matrix(rng, m, n)
            beta = mixed_beta(rng, n, m)
            plan, value = brute_force_placement(mat, beta)
            counts = plan.per_machine_counts()
            for j, mid in enumerate(mat.machine_ids):
                assert counts.get(mid, 0) <= beta[j]
            assert value == max(
                mat.values[i, mat.machine_ids.index(j)] for i, j in plan.assignment
            )

    def test_lexicographic_tie_break(self):
        # both assignments achieve max=5; (0->0, 1->1) is lexicographically first
        mat = LatencyMatrix([[5.0, 5.0], [5.0, 5.0]])
        plan, value = brute_force_placement(mat, [1, 1])
        assert value == 5.0
        assert plan.assignment == ((0, 0), (1, 1))

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        mat = column_order_matrix(rng, 4, 6)
        beta = mixed_beta(rng, 6, 4)
        first = brute_force_placement(mat, beta)
        for _ in range(3):
            assert brute_force_placement(mat, beta) == first


def _ps(rows):
    return ParetoSet.build(list(enumerate(rows)))


class TestBruteForceStagePareto:
    def test_three_objective_superset(self):
        sets = [_ps([[15, 10, 5], [20, 15, 2]]), _ps([[30, 5, 15], [40, 10, 5]])]
        out = brute_force_stage_pareto(sets, AggregatorSpec.of("max", "sum", "sum"))
        vectors = {tuple(v) for _, v in out}
        for expected in ([30, 15, 20], [40, 20, 10], [30, 20, 17], [40, 25, 7]):
            assert tuple(float(x) for x in expected) in vectors

    def test_single_instance_identity(self):
        ps = _ps([[10.0, 2.0], [5.0, 7.0]])
        out = brute_force_stage_pareto([ps], AggregatorSpec.of("max", "sum"))
        assert {tuple(v) for _, v in out} == {(10.0, 2.0), (5.0, 7.0)}
        assert {s for s, _ in out} == {(0,), (1,)}

    def test_size_guard(self):
        ps = _ps([[float(i), float(100 - i)] for i in range(100)])
        with pytest.raises(SizeGuardExceeded):
            brute_force_stage_pareto([ps] * 4, AggregatorSpec.of("max", "sum"))

    def test_representative_is_lowest_state(self):
        # states (0,1) and (1,0) both aggregate to (3, 7); (0, 1) is lower
        a = _ps([[2.0, 3.0], [1.0, 4.0]])
        b = _ps([[2.0, 3.0], [1.0, 4.0]])
        out = brute_force_stage_pareto([a, b], AggregatorSpec.of("sum", "sum"))
        by_vec = {tuple(v): s for s, v in out}
        assert by_vec[(3.0, 7.0)] == (0, 1)


class TestNonDominatedMask:
    def test_duplicates_keep_first(self):
        pts = np.array([[1.0, 1.0], [1.0, 1.0], [0.5, 2.0]])
        mask = non_dominated_mask(pts)
        assert mask.tolist() == [True, False, True]

    def test_matches_quadratic_filter(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            pts = rng.integers(0, 8, size=(30, 3)).astype(float)
            mask = non_dominated_mask(pts)
            for i in range(len(pts)):
                dominated = any(
                    (pts[j] <= pts[i]).all() and (pts[j] < pts[i]).any()
                    for j in range(len(pts))
                )
                duplicate_earlier = any(
                    (pts[j] == pts[i]).all() for j in range(i)
                )
                assert mask[i] == (not dominated and not duplicate_earlier)
