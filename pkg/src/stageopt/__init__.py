"""Latency-aware instance placement and hierarchical multi-objective
resource assignment for parallel stage scheduling."""

from stageopt.errors import (
    ConfigurationError,
    ContractViolation,
    NoSolutionError,
    SizeGuardExceeded,
    TraceLoadError,
)
from stageopt.model import (
    AggregatorSpec,
    InstanceSpec,
    LatencyMatrix,
    MachineSpec,
    ObjectiveVector,
    ParetoSet,
    PlacementPlan,
    ResourceConfig,
    StageSolution,
    dominates,
    pareto_filter,
)

__version__ = "0.1.0"

__all__ = [
    "AggregatorSpec",
    "ConfigurationError",
    "ContractViolation",
    "InstanceSpec",
    "LatencyMatrix",
    "MachineSpec",
    "NoSolutionError",
    "ObjectiveVector",
    "ParetoSet",
    "PlacementPlan",
    "ResourceConfig",
    "SizeGuardExceeded",
    "StageSolution",
    "TraceLoadError",
    "dominates",
    "pareto_filter",
    "__version__",
]
