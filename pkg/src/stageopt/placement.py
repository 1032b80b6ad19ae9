"""Placement solvers: watermark baseline, best-latency greedy, and its
clustering-boosted variant for large stages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from stageopt import kernels
from stageopt.errors import ContractViolation, NoSolutionError
from stageopt.model import (
    InstanceSpec,
    LatencyMatrix,
    MachineSpec,
    PlacementPlan,
    ResourceConfig,
)

# Guards against 2.999999... artifacts when capacities divide demands evenly.
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class CapacityPolicy:
    """How many instances a machine may take: capacity plus a diversity cap."""

    alpha: int
    demand: ResourceConfig

    def __post_init__(self) -> None:
        if self.alpha < 1:
            raise ContractViolation("alpha must be >= 1")


@dataclass(frozen=True)
class ClusterParams:
    """Knobs for the clustering-boosted solver."""

    bandwidth: float | None = None  # None selects Silverman's rule
    buckets: int = 4
    grid_size: int = 512

    def __post_init__(self) -> None:
        if self.buckets < 1:
            raise ContractViolation("buckets must be >= 1")
        if self.grid_size < 3:
            raise ContractViolation("grid_size must be >= 3")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ContractViolation("bandwidth must be > 0")


@dataclass(frozen=True)
class InstanceCluster:
    """Instances grouped by similar input size; largest member represents
    the group so its latency is never underestimated."""

    member_ids: tuple[int, ...]  # descending input_rows

    @property
    def representative(self) -> int:
        return self.member_ids[0]

    def __len__(self) -> int:
        return len(self.member_ids)


@dataclass(frozen=True)
class MachineCluster:
    """Machines sharing quantized utilization levels and hardware class."""

    member_ids: tuple[int, ...]
    key: tuple[int, int, str]
    representative: int

    def __len__(self) -> int:
        return len(self.member_ids)


def compute_beta(machines: Sequence[MachineSpec], policy: CapacityPolicy) -> list[int]:
    """Per-machine instance limit from free capacity and the diversity cap."""
    out = []
    for mach in machines:
        by_cpu = int(mach.free_cpu / policy.demand.cpu_cores + _FLOOR_EPS)
        by_mem = int(mach.free_mem / policy.demand.mem_gb + _FLOOR_EPS)
        out.append(max(0, min(by_cpu, by_mem, policy.alpha)))
    return out


def fuxi_place(
    latencies: LatencyMatrix,
    machines: Sequence[MachineSpec],
    policy: CapacityPolicy,
    key_resource: str = "cpu",
) -> PlacementPlan:
    """Watermark baseline: instances go, in id order, to the machines with
    the lowest utilization of the key resource, one instance per machine."""
    m, n = latencies.shape
    if len(machines) != n:
        raise ContractViolation("machines list must match the matrix columns")
    if key_resource not in ("cpu", "mem"):
        raise ContractViolation(f"key_resource must be 'cpu' or 'mem', got {key_resource!r}")
    beta = compute_beta(machines, policy)
    eligible = [j for j in range(n) if beta[j] >= 1]
    if len(eligible) < m:
        raise NoSolutionError(f"only {len(eligible)} machines can take an instance, need {m}")
    util = lambda j: machines[j].cpu_util if key_resource == "cpu" else machines[j].mem_util
    eligible.sort(key=lambda j: (util(j), j))
    pairs = tuple(
        (latencies.instance_ids[i], latencies.machine_ids[eligible[i]]) for i in range(m)
    )
    return PlacementPlan(pairs)


def ipa_place(latencies: LatencyMatrix, beta: Sequence[int]) -> PlacementPlan:
    """Greedy placement sending the instance with the largest best-achievable
    latency to its best machine first; latency-optimal whenever all matrix
    columns rank instances identically."""
    m, n = latencies.shape
    caps = np.asarray(list(beta), dtype=np.int64)
    if len(caps) != n:
        raise ContractViolation("beta length must match the matrix columns")
    assign = kernels.ipa_assign(latencies.values, caps)
    pairs = tuple(
        (latencies.instance_ids[i], latencies.machine_ids[int(assign[i])]) for i in range(m)
    )
    return PlacementPlan(pairs)


def stage_latency_of(plan: PlacementPlan, latencies: LatencyMatrix) -> float:
    """Max assigned latency of a plan under a prediction matrix."""
    row = {iid: i for i, iid in enumerate(latencies.instance_ids)}
    col = {mid: j for j, mid in enumerate(latencies.machine_ids)}
    return max(float(latencies.values[row[i], col[j]]) for i, j in plan.assignment)


def _silverman_bandwidth(rows: np.ndarray) -> float:
    n = len(rows)
    std = float(rows.std(ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(rows, [75, 25])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * spread * n ** (-0.2)


def cluster_instances_1d(
    instances: Sequence[InstanceSpec],
    bandwidth: float | None = None,
    grid_size: int = 512,
) -> list[InstanceCluster]:
    """Split instances at the local minima of a Gaussian kernel density over
    their input row counts.

    Clusters come back ordered by descending representative rows, members
    descending within each (ties resolved by lowest instance id).
    """
    if not instances:
        raise ContractViolation("need at least one instance")
    rows = np.array([inst.input_rows for inst in instances], dtype=np.float64)
    order = sorted(range(len(instances)), key=lambda i: (-rows[i], instances[i].id))
    lo, hi = float(rows.min()), float(rows.max())
    h = _silverman_bandwidth(rows) if bandwidth is None else float(bandwidth)
    if lo == hi or h <= 0:
        return [InstanceCluster(tuple(instances[i].id for i in order))]
    grid = np.linspace(lo, hi, grid_size)
    density = np.exp(-0.5 * ((grid[:, None] - rows[None, :]) / h) ** 2).sum(axis=1)
    interior = (density[1:-1] < density[:-2]) & (density[1:-1] < density[2:])
    boundaries = grid[1:-1][interior]
    if len(boundaries) == 0:
        return [InstanceCluster(tuple(instances[i].id for i in order))]
    clusters: list[InstanceCluster] = []
    member_rows = rows[order]
    cuts = sorted(boundaries, reverse=True)
    start = 0
    for cut in cuts:
        end = int(np.searchsorted(-member_rows, -cut, side="left"))
        if end > start:
            clusters.append(InstanceCluster(tuple(instances[i].id for i in order[start:end])))
            start = end
    if start < len(order):
        clusters.append(InstanceCluster(tuple(instances[i].id for i in order[start:])))
    return clusters


def cluster_machines(machines: Sequence[MachineSpec], buckets: int) -> list[MachineCluster]:
    """Group machines by quantized (cpu_util, mem_util) and hardware class.

    The representative is the member with median CPU utilization (lower
    median, ties to lowest id).
    """
    if buckets < 1:
        raise ContractViolation("buckets must be >= 1")
    groups: dict[tuple[int, int, str], list[MachineSpec]] = {}
    for mach in machines:
        cb = min(int(mach.cpu_util * buckets), buckets - 1)
        mb = min(int(mach.mem_util * buckets), buckets - 1)
        groups.setdefault((cb, mb, mach.hw_class), []).append(mach)
    out = []
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda mach: (mach.cpu_util, mach.id))
        rep = members[(len(members) - 1) // 2]
        ids = tuple(sorted(mach.id for mach in members))
        out.append(MachineCluster(ids, key, rep.id))
    return out


def ipa_place_clustered(
    instances: Sequence[InstanceSpec],
    machines: Sequence[MachineSpec],
    policy: CapacityPolicy,
    latency_fn: Callable[[InstanceSpec, MachineSpec], float],
    params: ClusterParams = ClusterParams(),
) -> PlacementPlan:
    """Best-latency greedy over cluster representatives.

    Each match dispatches a batch: the largest remaining members of the
    chosen instance cluster go to the chosen machine cluster's members in
    ascending machine id, one per machine per round, bounded by each
    machine's own capacity.
    """
    inst_by_id = {inst.id: inst for inst in instances}
    mach_by_id = {mach.id: mach for mach in machines}
    if len(inst_by_id) != len(instances):
        raise ContractViolation("duplicate instance ids")
    iclusters = cluster_instances_1d(instances, params.bandwidth, params.grid_size)
    mclusters = cluster_machines(machines, params.buckets)
    beta = dict(zip((mach.id for mach in machines), compute_beta(machines, policy)))

    mp = len(mclusters)
    slots: list[list[int]] = []  # per machine cluster: ids with remaining capacity, asc
    caps = np.zeros(mp, dtype=np.int64)
    for cj, mc in enumerate(mclusters):
        usable = [mid for mid in mc.member_ids if beta[mid] > 0]
        slots.append(usable)
        caps[cj] = sum(beta[mid] for mid in usable)

    mi = len(iclusters)
    lat = np.empty((mi, mp), dtype=np.float64)
    for ci, ic in enumerate(iclusters):
        rep = inst_by_id[ic.representative]
        for cj, mc in enumerate(mclusters):
            lat[ci, cj] = latency_fn(rep, mach_by_id[mc.representative])
    if not np.all(np.isfinite(lat)):
        raise ContractViolation("latency_fn produced a non-finite value")

    remaining = [list(ic.member_ids) for ic in iclusters]  # descending rows
    cursor = [0] * mi
    masked = lat.copy()
    masked[:, caps <= 0] = np.inf
    best_j = masked.argmin(axis=1)
    best_v = masked[np.arange(mi), best_j]
    left = np.array([len(r) for r in remaining], dtype=np.int64)
    pairs: list[tuple[int, int]] = []

    while left.any():
        cand = np.where(left > 0, best_v, -np.inf)
        ci = int(cand.argmax())
        if not np.isfinite(cand[ci]):
            raise NoSolutionError("machine clusters exhausted with instances remaining")
        cj = int(best_j[ci])
        delta = int(min(left[ci], caps[cj]))
        batch = remaining[ci][cursor[ci] : cursor[ci] + delta]
        cursor[ci] += delta
        left[ci] -= delta

        taken = 0
        while taken < delta:
            for mid in list(slots[cj]):
                if taken == delta:
                    break
                pairs.append((batch[taken], mid))
                taken += 1
                beta[mid] -= 1
                if beta[mid] == 0:
                    slots[cj].remove(mid)
        caps[cj] -= delta

        if caps[cj] == 0:
            masked[:, cj] = np.inf
            stale = (left > 0) & (best_j == cj)
            if stale.any():
                sub = masked[stale]
                arg = sub.argmin(axis=1)
                best_j[stale] = arg
                best_v[stale] = sub[np.arange(len(arg)), arg]
    return PlacementPlan(tuple(pairs))
