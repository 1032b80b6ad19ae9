import math

import numpy as np
import pytest

from helpers import dyadic_weights, random_path_problem, random_problem, strict_frontier
from stageopt.errors import ContractViolation
from stageopt.model import AggregatorSpec, ObjectiveVector, ParetoSet
from stageopt.oracle import brute_force_stage_pareto
from stageopt.stage_moo import (
    HierarchicalProblem,
    aggregate,
    default_weight_vectors,
    find_all_possible_values,
    find_optimal,
    general_hierarchical_moo,
    raa_path,
    solution_at,
    wun_recommend,
)


def _ps(rows):
    return ParetoSet.build(list(enumerate(rows)))


# Two instances, three objectives (max, sum, sum).
THREE_OBJ = (
    _ps([[15, 10, 5], [20, 15, 2]]),
    _ps([[30, 5, 15], [40, 10, 5]]),
)
AGG3 = AggregatorSpec.of("max", "sum", "sum")

# Two instances, four objectives (max, max, sum, sum).
FOUR_OBJ = (
    _ps([[15, 6, 10, 5], [20, 30, 15, 2]]),
    _ps([[30, 10, 5, 15], [40, 50, 10, 5]]),
)
AGG4 = AggregatorSpec.of("max", "max", "sum", "sum")


def vectors_of(pairs):
    return {tuple(v) for _, v in pairs}


class TestAggregate:
    def test_latency_cost_example(self):
        out = aggregate([[150, 5], [100, 5]], AggregatorSpec.of("max", "sum"))
        assert tuple(out) == (150.0, 10.0)

    def test_single_instance_identity(self):
        out = aggregate([[3, 4, 5]], AGG3)
        assert tuple(out) == (3.0, 4.0, 5.0)

    def test_three_objective_mix(self):
        out = aggregate([[15, 10, 5], [30, 5, 15]], AGG3)
        assert tuple(out) == (30.0, 15.0, 20.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            aggregate([[1, 2], [1, 2, 3]], AggregatorSpec.of("max", "sum"))


class TestFindAllPossibleValues:
    def test_three_objective_example(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.5),))
        assert find_all_possible_values(p, 0) == [30.0, 40.0]

    def test_four_objective_example(self):
        p = HierarchicalProblem(FOUR_OBJ, AGG4, ((0.5, 0.5),))
        assert find_all_possible_values(p, 0) == [30.0, 40.0]
        assert find_all_possible_values(p, 1) == [10.0, 30.0, 50.0]

    def test_single_instance_distinct_values(self):
        p = HierarchicalProblem((THREE_OBJ[0],), AGG3, ((0.5, 0.5),))
        assert find_all_possible_values(p, 0) == [15.0, 20.0]

    def test_rejects_sum_objective(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.5),))
        with pytest.raises(ContractViolation):
            find_all_possible_values(p, 1)


class TestFindOptimal:
    def test_bound_30_even_weights(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.5),))
        state, vec = find_optimal(p, [30], [0.5, 0.5])
        assert tuple(vec) == (30.0, 15.0, 20.0)

    def test_bound_40_skewed_weights(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.1, 0.9),))
        state, vec = find_optimal(p, [40], [0.1, 0.9])
        assert tuple(vec) == (40.0, 25.0, 7.0)

    def test_four_objective_bounds(self):
        p = HierarchicalProblem(FOUR_OBJ, AGG4, ((0.5, 0.5),))
        state, vec = find_optimal(p, [30, 10], [0.5, 0.5])
        assert tuple(vec) == (30.0, 10.0, 15.0, 20.0)

    def test_infeasible_bounds_give_none(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.5),))
        assert find_optimal(p, [10], [0.5, 0.5]) is None

    def test_max_components_recomputed_not_bounds(self):
        p = HierarchicalProblem(FOUR_OBJ, AGG4, ((0.5, 0.5),))
        _, vec = find_optimal(p, [30, 50], [0.5, 0.5])
        assert tuple(vec) == (30.0, 10.0, 15.0, 20.0)  # second max is 10, not 50


class TestGeneralHierarchicalMoo:
    def test_three_objective_even_weights(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.5),))
        assert vectors_of(general_hierarchical_moo(p)) == {
            (30.0, 15.0, 20.0),
            (40.0, 20.0, 10.0),
        }

    def test_three_objective_both_weights(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.5), (0.1, 0.9)))
        assert vectors_of(general_hierarchical_moo(p)) == {
            (30.0, 15.0, 20.0),
            (40.0, 20.0, 10.0),
            (30.0, 20.0, 17.0),
            (40.0, 25.0, 7.0),
        }

    def test_four_objective_example(self):
        p = HierarchicalProblem(FOUR_OBJ, AGG4, ((0.5, 0.5),))
        assert vectors_of(general_hierarchical_moo(p)) == {
            (30.0, 10.0, 15.0, 20.0),
            (40.0, 50.0, 20.0, 10.0),
        }

    def test_sum_only_degenerates_to_single_pass(self):
        sets = (_ps([[4, 1], [1, 5]]), _ps([[3, 2], [2, 6]]))
        agg = AggregatorSpec.of("sum", "sum")
        p = HierarchicalProblem(sets, agg, ((0.5, 0.5),))
        out = general_hierarchical_moo(p)
        assert len(out) == 1
        state, vec = out[0]
        brute = {tuple(v) for _, v in brute_force_stage_pareto(sets, agg)}
        assert tuple(vec) in brute

    def test_subset_of_bruteforce_on_random_problems(self):
        rng = np.random.default_rng(20)
        for _ in range(150):
            p = random_problem(rng)
            brute = {tuple(v) for _, v in brute_force_stage_pareto(p.pareto_sets, p.agg)}
            for _, vec in general_hierarchical_moo(p):
                assert tuple(vec) in brute

    def test_wsf_equivalence_sum_only(self):
        # the per-instance weighted pick attains the exhaustive minimum
        rng = np.random.default_rng(21)
        for _ in range(60):
            p = random_problem(rng, max_k=3)
            if p.agg.k1 > 0:
                continue
            for w in (dyadic_weights(rng, p.agg.k2) for _ in range(3)):
                state, vec = find_optimal(p, [], w)
                got = sum(wv * x for wv, x in zip(w, vec))
                best = min(
                    sum(wv * x for wv, x in zip(w, bv))
                    for _, bv in brute_force_stage_pareto(p.pareto_sets, p.agg)
                )
                assert got == best


class TestRaaPath:
    def test_two_instance_walk(self):
        sets = (
            ParetoSet.build([("a", [150.0, 5.0]), ("b", [90.0, 8.0])]),
            ParetoSet.build([("c", [100.0, 5.0]), ("d", [80.0, 9.0])]),
        )
        result = raa_path(HierarchicalProblem(sets, AggregatorSpec.of("max", "sum")))
        assert tuple(result.objective(0)) == (150.0, 10.0)
        assert result.state(0) == (0, 0)
        assert [tuple(v) for _, v in result] == [(150.0, 10.0), (100.0, 13.0), (90.0, 17.0)]

    def test_single_instance_emits_whole_frontier(self):
        rng = np.random.default_rng(22)
        ps = strict_frontier(rng, 5)
        result = raa_path(HierarchicalProblem((ps,), AggregatorSpec.of("max", "sum")))
        assert [tuple(v) for _, v in result] == [tuple(v) for v in ps.vectors()]
        assert [s for s, _ in result] == [(j,) for j in range(5)]

    def test_equals_bruteforce_on_random_problems(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            p = random_path_problem(rng)
            walk = {(s, tuple(v)) for s, v in raa_path(p)}
            brute = {(s, tuple(v)) for s, v in brute_force_stage_pareto(p.pareto_sets, p.agg)}
            assert walk == brute

    def test_general_subset_of_path(self):
        rng = np.random.default_rng(24)
        for _ in range(100):
            p = random_path_problem(rng)
            path_vecs = {tuple(v) for _, v in raa_path(p)}
            for _, vec in general_hierarchical_moo(p):
                assert tuple(vec) in path_vecs

    def test_monotone_emission(self):
        rng = np.random.default_rng(25)
        for _ in range(50):
            result = raa_path(random_path_problem(rng, max_m=6, max_p=6))
            lats = [v[0] for _, v in result]
            costs = [v[1] for _, v in result]
            assert all(a > b for a, b in zip(lats, lats[1:]))
            assert all(a < b for a, b in zip(costs, costs[1:]))

    def test_emitted_equals_reaggregation(self):
        rng = np.random.default_rng(26)
        for _ in range(50):
            p = random_path_problem(rng)
            for state, vec in raa_path(p):
                rows = [p.values_of(i)[state[i]] for i in range(p.m)]
                assert aggregate(rows, p.agg) == vec

    def test_lazy_state_random_access(self):
        rng = np.random.default_rng(27)
        p = random_path_problem(rng, max_m=5, max_p=5)
        result = raa_path(p)
        states = [s for s, _ in result]
        for t in (0, len(result) - 1, len(result) // 2):
            assert result.state(t) == states[t]
        assert result[len(result) - 1] == (states[-1], result.objective(len(result) - 1))

    def test_requires_max_sum(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.5),))
        with pytest.raises(ContractViolation):
            raa_path(p)

    def test_cross_instance_latency_ties(self):
        sets = (
            ParetoSet.build([(0, [50.0, 1.0]), (1, [20.0, 3.0])]),
            ParetoSet.build([(0, [50.0, 2.0]), (1, [30.0, 4.0])]),
        )
        p = HierarchicalProblem(sets, AggregatorSpec.of("max", "sum"))
        walk = {(s, tuple(v)) for s, v in raa_path(p)}
        brute = {(s, tuple(v)) for s, v in brute_force_stage_pareto(sets, p.agg)}
        assert walk == brute


class TestWunRecommend:
    def test_singleton(self):
        assert wun_recommend([ObjectiveVector([5, 5])], (0.5, 0.5)) == 0

    def test_pure_latency_weight_picks_min_latency(self):
        sols = [ObjectiveVector(v) for v in ([150, 10], [100, 25], [80, 40])]
        assert wun_recommend(sols, (1.0, 0.0)) == 2

    def test_balanced_weights_pick_knee(self):
        sols = [ObjectiveVector(v) for v in ([150, 10], [100, 25], [80, 40])]
        assert wun_recommend(sols, (0.5, 0.5)) == 1

    def test_accepts_pairs_and_pareto_sets(self):
        pairs = [((0,), ObjectiveVector([10, 1])), ((1,), ObjectiveVector([5, 9]))]
        assert wun_recommend(pairs, (1.0, 0.0)) == 1
        ps = ParetoSet.build([(0, [10, 1]), (1, [5, 9])])
        assert wun_recommend(ps, (0.0, 1.0)) == 0

    def test_explicit_normalization_bounds(self):
        sols = [ObjectiveVector(v) for v in ([150, 10], [100, 25], [80, 40])]
        bounds = [(0.0, 300.0), (0.0, 40.0)]
        # utopia (80, 10) -> normalized (0.2667, 0.25); distances shift
        idx = wun_recommend(sols, (0.5, 0.5), normalization=bounds)
        dists = []
        for v in sols:
            n = [(v[0] - 0) / 300, (v[1] - 0) / 40]
            u = [80 / 300, 10 / 40]
            dists.append(math.sqrt(0.5 * (n[0] - u[0]) ** 2 + 0.5 * (n[1] - u[1]) ** 2))
        assert idx == dists.index(min(dists))

    def test_empty_raises(self):
        with pytest.raises(ContractViolation):
            wun_recommend([], (0.5, 0.5))


class TestSolutionAt:
    def test_objectives_are_reaggregation(self):
        rng = np.random.default_rng(30)
        for _ in range(30):
            p = random_path_problem(rng)
            for state, vec in raa_path(p):
                sol = solution_at(p, state)
                assert sol.objectives == vec
                assert len(sol.configs) == p.m
                assert sol.configs == tuple(
                    p.pareto_sets[i][state[i]][0] for i in range(p.m)
                )

    def test_rejects_bad_state(self):
        p = HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.5),))
        with pytest.raises(ContractViolation):
            solution_at(p, (0,))
        with pytest.raises(ContractViolation):
            solution_at(p, (0, 9))


class TestWeightSchedules:
    def test_two_sum_default_is_eleven_vectors(self):
        ws = default_weight_vectors(2)
        assert len(ws) == 11
        assert (0.0, 1.0) in ws and (1.0, 0.0) in ws and (0.5, 0.5) in ws

    def test_single_sum(self):
        assert default_weight_vectors(1) == ((1.0,),)

    def test_three_sum_lattice(self):
        ws = default_weight_vectors(3)
        assert all(abs(sum(w) - 1) < 1e-9 for w in ws)
        assert (1.0, 0.0, 0.0) in ws and (0.25, 0.5, 0.25) in ws

    def test_problem_rejects_bad_weights(self):
        with pytest.raises(ContractViolation):
            HierarchicalProblem(THREE_OBJ, AGG3, ((0.5, 0.6),))
        with pytest.raises(ContractViolation):
            HierarchicalProblem(THREE_OBJ, AGG3, ((1.5, -0.5),))
