import pytest

from stageopt.errors import ContractViolation
from stageopt.instance_moo import ConfigGrid, ObjectiveModel, cost_of, instance_pareto
from stageopt.latency import PredictorParams
from stageopt.model import InstanceSpec, MachineSpec, ObjectiveVector, ResourceConfig
from stageopt.oracle import non_dominated_mask

import numpy as np


MACH = MachineSpec(0, "gen1", cpu_util=0.5, mem_util=0.2, cpu_capacity=16, mem_capacity=64)
PARAMS = PredictorParams(
    base_seconds_per_row=0.01,
    hw_speed={"gen1": 1.0},
    contention_coeff=1.0,
    cpu_exponent=0.8,
    mem_floor_gb=2.0,
    mem_penalty=0.5,
)


class TestCostOf:
    def test_one_cpu_hour(self):
        assert cost_of(3600.0, ResourceConfig(1.0, 0.001), (1.0, 0.0)) == 1.0

    def test_zero_latency_zero_cost(self):
        assert cost_of(0.0, ResourceConfig(4.0, 8.0), (1.0, 0.25)) == 0.0

    def test_weighted_mix(self):
        # 1800/3600 * (1*2 + 0.25*4) = 1.5
        assert cost_of(1800.0, ResourceConfig(2.0, 4.0), (1.0, 0.25)) == 1.5

    def test_rejects_negative_latency(self):
        with pytest.raises(ContractViolation):
            cost_of(-1.0, ResourceConfig(1, 1), (1.0, 0.0))


class TestConfigGrid:
    def test_defaults_are_valid(self):
        grid = ConfigGrid()
        assert len(grid.configs()) == 20

    def test_capacity_caps(self):
        grid = ConfigGrid()
        cfgs = grid.configs(max_cpu=1.0, max_mem=4.0)
        assert all(c.cpu_cores <= 1.0 and c.mem_gb <= 4.0 for c in cfgs)
        assert len(cfgs) == 6

    def test_rejects_unsorted(self):
        with pytest.raises(ContractViolation):
            ConfigGrid(cpu_choices=(2.0, 1.0))

    def test_rejects_empty(self):
        with pytest.raises(ContractViolation):
            ConfigGrid(cpu_choices=())


class TestInstancePareto:
    def test_single_grid_point(self):
        grid = ConfigGrid(cpu_choices=(1.0,), mem_choices=(4.0,))
        model = ObjectiveModel.latency_cost(PARAMS)
        ps = instance_pareto(InstanceSpec(0, 1000), MACH, grid, model)
        assert len(ps) == 1
        assert ps[0][0] == ResourceConfig(1.0, 4.0)

    def test_frontier_matches_bruteforce_filter(self):
        grid = ConfigGrid()
        model = ObjectiveModel.latency_cost(PARAMS)
        inst = InstanceSpec(0, 12345)
        ps = instance_pareto(inst, MACH, grid, model)
        pts = np.array([model.evaluate(inst, cfg, MACH) for cfg in grid.configs()])
        expected = {tuple(p) for p in pts[non_dominated_mask(pts)]}
        assert {tuple(v) for _, v in ps} == expected

    def test_k2_strictly_monotone(self):
        grid = ConfigGrid()
        model = ObjectiveModel.latency_cost(PARAMS)
        ps = instance_pareto(InstanceSpec(0, 99999), MACH, grid, model)
        lats = [v[0] for v in ps.vectors()]
        costs = [v[1] for v in ps.vectors()]
        assert all(a > b for a, b in zip(lats, lats[1:]))
        assert all(a < b for a, b in zip(costs, costs[1:]))
        assert len(ps) >= 1

    def test_pure_cpu_sweep_at_min_memory(self):
        # mem above the floor only adds cost, so the frontier is the cpu
        # sweep at the smallest memory choice
        params = PredictorParams(
            base_seconds_per_row=0.01,
            hw_speed={"gen1": 1.0},
            contention_coeff=0.0,
            cpu_exponent=0.5,
            mem_floor_gb=1.0,
            mem_penalty=0.0,
        )
        model = ObjectiveModel.latency_cost(params, cost_weights=(1.0, 0.25))
        grid = ConfigGrid(cpu_choices=(1.0, 2.0, 4.0), mem_choices=(1.0, 8.0))
        ps = instance_pareto(InstanceSpec(0, 50000), MACH, grid, model)
        assert [tag for tag, _ in ps] == [
            ResourceConfig(1.0, 1.0),
            ResourceConfig(2.0, 1.0),
            ResourceConfig(4.0, 1.0),
        ]

    def test_table_stub_evaluators(self):
        # custom evaluators let a lookup table stand in for the predictor
        table = {
            (1, (1.0, 1.0)): (150.0, 5.0),
            (1, (2.0, 1.0)): (90.0, 8.0),
            (2, (1.0, 1.0)): (100.0, 5.0),
            (2, (2.0, 1.0)): (80.0, 9.0),
        }
        model = ObjectiveModel(
            [
                lambda i, c, m: table[(i.id, (c.cpu_cores, c.mem_gb))][0],
                lambda i, c, m: table[(i.id, (c.cpu_cores, c.mem_gb))][1],
            ]
        )
        grid = ConfigGrid(cpu_choices=(1.0, 2.0), mem_choices=(1.0,))
        ps1 = instance_pareto(InstanceSpec(1, 10), MACH, grid, model)
        ps2 = instance_pareto(InstanceSpec(2, 10), MACH, grid, model)
        assert (ResourceConfig(1.0, 1.0), ObjectiveVector((150.0, 5.0))) in list(ps1)
        assert (ResourceConfig(1.0, 1.0), ObjectiveVector((100.0, 5.0))) in list(ps2)

    def test_empty_capacity_cap_raises(self):
        grid = ConfigGrid()
        model = ObjectiveModel.latency_cost(PARAMS)
        with pytest.raises(ContractViolation):
            instance_pareto(InstanceSpec(0, 10), MACH, grid, model, max_cpu=0.1)

    def test_min_latency_floors_empty_instance(self):
        model = ObjectiveModel.latency_cost(PARAMS, min_latency=0.001)
        vec = model.evaluate(InstanceSpec(0, 0), ResourceConfig(1, 4), MACH)
        assert vec[0] == 0.001
