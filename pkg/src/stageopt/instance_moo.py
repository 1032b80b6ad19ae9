"""Per-instance Pareto frontiers over a discrete resource-configuration grid.

Exhaustive evaluation of grids this small is exact, so no gradient solver is
needed; the output (a frontier sorted by descending latency) is exactly what
the stage-level composition consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from stageopt.errors import ContractViolation
from stageopt.latency import DEFAULT_MIN_LATENCY, PredictorParams, predict
from stageopt.model import (
    InstanceSpec,
    MachineSpec,
    ObjectiveVector,
    ParetoSet,
    ResourceConfig,
)

Evaluator = Callable[[InstanceSpec, ResourceConfig, MachineSpec], float]

DEFAULT_COST_WEIGHTS = (1.0, 0.25)


@dataclass(frozen=True)
class ConfigGrid:
    """Candidate CPU and memory choices for one instance's container."""

    cpu_choices: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    mem_choices: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0, 12.0)

    def __post_init__(self) -> None:
        for name in ("cpu_choices", "mem_choices"):
            vals = getattr(self, name)
            if not vals:
                raise ContractViolation(f"{name} must be non-empty")
            if any(v <= 0 for v in vals):
                raise ContractViolation(f"{name} must be positive")
            if any(a >= b for a, b in zip(vals, vals[1:])):
                raise ContractViolation(f"{name} must be strictly increasing")

    def configs(
        self, max_cpu: float | None = None, max_mem: float | None = None
    ) -> list[ResourceConfig]:
        """Grid points within the optional capacity caps, cpu-major order."""
        return [
            ResourceConfig(c, g)
            for c in self.cpu_choices
            if max_cpu is None or c <= max_cpu
            for g in self.mem_choices
            if max_mem is None or g <= max_mem
        ]


def cost_of(latency: float, cfg: ResourceConfig, weights: Sequence[float]) -> float:
    """Resource-hours priced by per-resource weights."""
    if latency < 0:
        raise ContractViolation("latency must be >= 0")
    w_cpu, w_mem = weights
    return latency / 3600.0 * (w_cpu * cfg.cpu_cores + w_mem * cfg.mem_gb)


class ObjectiveModel:
    """The k objective evaluators for one instance-on-machine decision.

    Index 0 is always latency.  :meth:`latency_cost` builds the standard
    two-objective model (predicted latency, latency-proportional cost);
    custom evaluator lists support table stubs and extra objectives.
    """

    def __init__(self, evaluators: Sequence[Evaluator]):
        if not evaluators:
            raise ContractViolation("need at least one objective evaluator")
        self.evaluators = tuple(evaluators)

    @classmethod
    def latency_cost(
        cls,
        params: PredictorParams,
        cost_weights: Sequence[float] = DEFAULT_COST_WEIGHTS,
        min_latency: float = DEFAULT_MIN_LATENCY,
        extra: Sequence[Evaluator] = (),
    ) -> "ObjectiveModel":
        weights = tuple(cost_weights)

        def latency(inst: InstanceSpec, cfg: ResourceConfig, mach: MachineSpec) -> float:
            return max(predict(inst, cfg, mach, params), min_latency)

        def cost(inst: InstanceSpec, cfg: ResourceConfig, mach: MachineSpec) -> float:
            return cost_of(latency(inst, cfg, mach), cfg, weights)

        return cls([latency, cost, *extra])

    @property
    def k(self) -> int:
        return len(self.evaluators)

    def evaluate(self, inst: InstanceSpec, cfg: ResourceConfig, mach: MachineSpec) -> ObjectiveVector:
        return ObjectiveVector(fn(inst, cfg, mach) for fn in self.evaluators)


def instance_pareto(
    inst: InstanceSpec,
    mach: MachineSpec,
    grid: ConfigGrid,
    model: ObjectiveModel,
    max_cpu: float | None = None,
    max_mem: float | None = None,
) -> ParetoSet:
    """Frontier of all grid configurations within the capacity caps."""
    cfgs = grid.configs(max_cpu, max_mem)
    if not cfgs:
        raise ContractViolation(
            f"no grid configuration fits caps (cpu<={max_cpu}, mem<={max_mem})"
        )
    return ParetoSet.build((cfg, model.evaluate(inst, cfg, mach)) for cfg in cfgs)
