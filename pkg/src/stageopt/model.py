"""Domain types shared by the placement and resource-assignment solvers.

Everything here is an immutable value after construction and safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from stageopt.errors import ContractViolation

__all__ = [
    "InstanceSpec",
    "MachineSpec",
    "ResourceConfig",
    "LatencyMatrix",
    "PlacementPlan",
    "ObjectiveVector",
    "ParetoSet",
    "AggregatorSpec",
    "StageSolution",
    "dominates",
    "pareto_filter",
]


@dataclass(frozen=True)
class InstanceSpec:
    """One parallel task of a stage, described by its input partition."""

    id: int
    input_rows: int
    input_bytes: int = 0

    def __post_init__(self) -> None:
        if self.input_rows < 0:
            raise ContractViolation(f"instance {self.id}: input_rows must be >= 0")
        if self.input_bytes < 0:
            raise ContractViolation(f"instance {self.id}: input_bytes must be >= 0")


@dataclass(frozen=True)
class MachineSpec:
    """A machine's hardware class, current load, and capacities."""

    id: int
    hw_class: str
    cpu_util: float
    mem_util: float
    cpu_capacity: float
    mem_capacity: float

    def __post_init__(self) -> None:
        for name in ("cpu_util", "mem_util"):
            u = getattr(self, name)
            if not 0.0 <= u <= 1.0:
                raise ContractViolation(f"machine {self.id}: {name}={u} not in [0, 1]")
        for name in ("cpu_capacity", "mem_capacity"):
            c = getattr(self, name)
            if not c > 0:
                raise ContractViolation(f"machine {self.id}: {name}={c} must be > 0")

    @property
    def free_cpu(self) -> float:
        return self.cpu_capacity * (1.0 - self.cpu_util)

    @property
    def free_mem(self) -> float:
        return self.mem_capacity * (1.0 - self.mem_util)


@dataclass(frozen=True)
class ResourceConfig:
    """CPU cores and memory granted to one instance's container."""

    cpu_cores: float
    mem_gb: float

    def __post_init__(self) -> None:
        if not self.cpu_cores > 0:
            raise ContractViolation(f"cpu_cores={self.cpu_cores} must be > 0")
        if not self.mem_gb > 0:
            raise ContractViolation(f"mem_gb={self.mem_gb} must be > 0")


class ObjectiveVector(tuple):
    """A point in k-dimensional objective space (minimization everywhere).

    By convention index 0 is latency in seconds and, for two-objective
    problems, index 1 is cost.
    """

    def __new__(cls, values: Iterable[float]) -> "ObjectiveVector":
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ContractViolation("objective vector must have k >= 1")
        if not all(math.isfinite(v) for v in vals):
            raise ContractViolation(f"objective values must be finite, got {vals}")
        return super().__new__(cls, vals)

    @property
    def k(self) -> int:
        return len(self)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff `a` is no worse than `b` everywhere and strictly better once.

    Comparisons are exact; objective values are expected to come from a
    single deterministic arithmetic path.
    """
    if len(a) != len(b):
        raise ContractViolation(f"dimension mismatch: {len(a)} vs {len(b)}")
    no_worse = all(x <= y for x, y in zip(a, b))
    return no_worse and any(x < y for x, y in zip(a, b))


def pareto_filter(
    points: Iterable[tuple[Any, Sequence[float]]],
) -> list[tuple[Any, ObjectiveVector]]:
    """Keep exactly the non-dominated points.

    Points with identical objective vectors collapse to the first occurrence
    in input order, which makes the output deterministic.
    """
    pts = [(tag, ObjectiveVector(vec)) for tag, vec in points]
    if not pts:
        return []
    k = pts[0][1].k
    for _, vec in pts:
        if vec.k != k:
            raise ContractViolation("mixed objective dimensions in pareto_filter")
    out = []
    for i, (tag, vec) in enumerate(pts):
        keep = True
        for j, (_, other) in enumerate(pts):
            if j == i:
                continue
            if dominates(other, vec) or (other == vec and j < i):
                keep = False
                break
        if keep:
            out.append((tag, vec))
    return out


class ParetoSet:
    """A non-dominated frontier of (configuration, objectives) entries.

    For two objectives the entries are kept strictly descending in
    objective 0 (hence strictly ascending in objective 1).
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[tuple[Any, ObjectiveVector]]):
        ents = tuple((tag, ObjectiveVector(vec)) for tag, vec in entries)
        if not ents:
            raise ContractViolation("ParetoSet cannot be empty")
        k = ents[0][1].k
        for _, vec in ents:
            if vec.k != k:
                raise ContractViolation("mixed objective dimensions in ParetoSet")
        arr = np.array([vec for _, vec in ents], dtype=np.float64)
        if k == 2:
            # strict monotonicity implies mutual non-domination and no duplicates
            if not (np.diff(arr[:, 0]) < 0).all():
                raise ContractViolation("k=2 ParetoSet must strictly descend in objective 0")
            if not (np.diff(arr[:, 1]) > 0).all():
                raise ContractViolation("k=2 ParetoSet must strictly ascend in objective 1")
        elif len(ents) > 1:
            le = (arr[:, None, :] <= arr[None, :, :]).all(axis=2)
            lt = (arr[:, None, :] < arr[None, :, :]).any(axis=2)
            np.fill_diagonal(le, False)
            if (le & lt).any():
                raise ContractViolation("ParetoSet contains a dominated entry")
            if (le & ~lt).any():
                raise ContractViolation("ParetoSet contains duplicate objective vectors")
        object.__setattr__(self, "entries", ents)

    @classmethod
    def build(cls, points: Iterable[tuple[Any, Sequence[float]]]) -> "ParetoSet":
        """Filter arbitrary points down to their frontier, canonically sorted."""
        kept = pareto_filter(points)
        if not kept:
            raise ContractViolation("no points to build a ParetoSet from")
        kept.sort(key=lambda e: (-e[1][0],) + tuple(e[1][1:]))
        return cls(kept)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i: int) -> tuple[Any, ObjectiveVector]:
        return self.entries[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ParetoSet) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"ParetoSet({list(self.entries)!r})"

    @property
    def k(self) -> int:
        return self.entries[0][1].k

    def vectors(self) -> list[ObjectiveVector]:
        return [vec for _, vec in self.entries]


class LatencyMatrix:
    """Predicted latencies of m instances on n machines, row-major."""

    __slots__ = ("values", "instance_ids", "machine_ids")

    def __init__(
        self,
        values: np.ndarray | Sequence[Sequence[float]],
        instance_ids: Sequence[int] | None = None,
        machine_ids: Sequence[int] | None = None,
    ):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ContractViolation(f"latency matrix must be 2-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or not np.all(arr > 0):
            raise ContractViolation("latency matrix entries must be finite and > 0")
        m, n = arr.shape
        iids = tuple(range(m)) if instance_ids is None else tuple(int(i) for i in instance_ids)
        mids = tuple(range(n)) if machine_ids is None else tuple(int(j) for j in machine_ids)
        if len(iids) != m or len(mids) != n:
            raise ContractViolation("id lists must match the matrix dimensions")
        arr.flags.writeable = False
        self.values = arr
        self.instance_ids = iids
        self.machine_ids = mids

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __repr__(self) -> str:
        m, n = self.shape
        return f"LatencyMatrix({m}x{n})"


@dataclass(frozen=True)
class PlacementPlan:
    """The assignment of every instance to exactly one machine."""

    assignment: tuple[tuple[int, int], ...]  # (instance_id, machine_id)

    def __post_init__(self) -> None:
        iids = [i for i, _ in self.assignment]
        if len(set(iids)) != len(iids):
            raise ContractViolation("an instance appears more than once in the plan")
        object.__setattr__(
            self, "assignment", tuple(sorted(self.assignment, key=lambda p: p[0]))
        )

    def machine_of(self, instance_id: int) -> int:
        for i, j in self.assignment:
            if i == instance_id:
                return j
        raise KeyError(instance_id)

    def per_machine_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for _, j in self.assignment:
            counts[j] = counts.get(j, 0) + 1
        return counts


_AGG_TAGS = ("max", "sum")


@dataclass(frozen=True)
class AggregatorSpec:
    """Per-objective rule lifting instance objectives to stage objectives."""

    tags: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tags:
            raise ContractViolation("aggregator spec needs k >= 1 objectives")
        for t in self.tags:
            if t not in _AGG_TAGS:
                raise ContractViolation(f"unknown aggregator {t!r}, expected one of {_AGG_TAGS}")

    @classmethod
    def of(cls, *tags: str) -> "AggregatorSpec":
        return cls(tuple(tags))

    @classmethod
    def parse(cls, spec: str) -> "AggregatorSpec":
        return cls(tuple(t.strip() for t in spec.split(",")))

    @property
    def k(self) -> int:
        return len(self.tags)

    @property
    def k1(self) -> int:
        return sum(1 for t in self.tags if t == "max")

    @property
    def k2(self) -> int:
        return sum(1 for t in self.tags if t == "sum")

    @property
    def max_indices(self) -> tuple[int, ...]:
        return tuple(i for i, t in enumerate(self.tags) if t == "max")

    @property
    def sum_indices(self) -> tuple[int, ...]:
        return tuple(i for i, t in enumerate(self.tags) if t == "sum")


@dataclass(frozen=True)
class StageSolution:
    """A per-instance resource plan paired with its aggregated objectives."""

    configs: tuple[ResourceConfig, ...]
    objectives: ObjectiveVector

    def __post_init__(self) -> None:
        if not self.configs:
            raise ContractViolation("stage solution needs at least one instance config")
