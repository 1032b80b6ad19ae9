"""Trace replay harness: load or generate workloads, run one scheduler mode
per stage, and compare modes.

Report JSON written by ``solve`` is byte-deterministic for a fixed input and
seed; wall-clock timings therefore live in a separate sidecar structure and
in the ``compare`` summary only.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from stageopt.errors import ContractViolation, NoSolutionError, TraceLoadError
from stageopt.instance_moo import (
    DEFAULT_COST_WEIGHTS,
    ConfigGrid,
    ObjectiveModel,
    cost_of,
    instance_pareto,
)
from stageopt.latency import (
    DEFAULT_MIN_LATENCY,
    NoiseParams,
    NoiseSampler,
    PredictorParams,
    build_latency_matrix,
    predict,
)
from stageopt.model import (
    AggregatorSpec,
    InstanceSpec,
    MachineSpec,
    ParetoSet,
    PlacementPlan,
    ResourceConfig,
)
from stageopt.placement import (
    CapacityPolicy,
    ClusterParams,
    compute_beta,
    fuxi_place,
    ipa_place,
    ipa_place_clustered,
)
from stageopt.stage_moo import (
    HierarchicalProblem,
    general_hierarchical_moo,
    raa_path,
    solution_at,
    wun_recommend,
)

MODES = ("fuxi", "ipa", "ipa-clustered", "ipa-raa-general", "ipa-raa-path")

_LATENCY_COST = AggregatorSpec.of("max", "sum")


@dataclass(frozen=True)
class StageTrace:
    """One stage's instances plus its default per-instance resource plan."""

    stage_id: int
    instances: tuple[InstanceSpec, ...]
    default_config: ResourceConfig

    def __post_init__(self) -> None:
        object.__setattr__(self, "instances", tuple(self.instances))
        if not self.instances:
            raise ContractViolation(f"stage {self.stage_id}: needs at least one instance")
        ids = [inst.id for inst in self.instances]
        if len(set(ids)) != len(ids):
            raise ContractViolation(f"stage {self.stage_id}: duplicate instance ids")


@dataclass(frozen=True)
class ClusterTrace:
    """The machines available to every stage."""

    machines: tuple[MachineSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "machines", tuple(self.machines))
        if not self.machines:
            raise ContractViolation("cluster needs at least one machine")
        ids = [m.id for m in self.machines]
        if len(set(ids)) != len(ids):
            raise ContractViolation("duplicate machine ids in cluster")


@dataclass(frozen=True)
class HarnessConfig:
    """Everything the pipeline needs besides the traces themselves."""

    predictor: PredictorParams = field(default_factory=PredictorParams)
    grid: ConfigGrid = field(default_factory=ConfigGrid)
    cost_weights: tuple[float, float] = DEFAULT_COST_WEIGHTS
    wun_weights: tuple[float, float] = (0.5, 0.5)
    alpha: int = 2
    buckets: int = 4
    bandwidth: float | None = None
    min_latency: float = DEFAULT_MIN_LATENCY
    key_resource: str = "cpu"
    noise: NoiseParams | None = None
    timeout_s: float = 60.0

    @classmethod
    def from_dict(cls, raw: Mapping) -> "HarnessConfig":
        known = {
            "predictor", "grid", "noise", "alpha", "buckets", "bandwidth",
            "min_latency", "key_resource", "timeout_s", "cost_weights", "wun_weights",
        }
        unknown = set(raw) - known
        if unknown:
            raise ContractViolation(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        if "predictor" in raw:
            kwargs["predictor"] = PredictorParams(**raw["predictor"])
        if "grid" in raw:
            kwargs["grid"] = ConfigGrid(
                tuple(raw["grid"]["cpu_choices"]), tuple(raw["grid"]["mem_choices"])
            )
        for key in ("alpha", "buckets", "bandwidth", "min_latency", "key_resource", "timeout_s"):
            if key in raw:
                kwargs[key] = raw[key]
        for key in ("cost_weights", "wun_weights"):
            if key in raw:
                kwargs[key] = tuple(raw[key])
        if raw.get("noise") is not None:
            kwargs["noise"] = NoiseParams(**raw["noise"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "HarnessConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class InstanceOutcome:
    instance_id: int
    machine_id: int
    config: ResourceConfig
    latency_s: float
    cost: float


@dataclass(frozen=True)
class StageReport:
    """Outcome of solving one stage in one mode."""

    stage_id: int
    mode: str
    stage_latency_s: float
    stage_cost: float
    solve_time_ms: float
    outcomes: tuple[InstanceOutcome, ...]
    grid_restricted: bool = False
    noisy: bool = False
    timed_out: bool = False

    @property
    def stage_latency_in_s(self) -> float:
        """Stage latency including the solver's own running time."""
        return self.stage_latency_s + self.solve_time_ms / 1000.0

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "stage_id": self.stage_id,
            "mode": self.mode,
            "stage_latency_s": self.stage_latency_s,
            "stage_cost": self.stage_cost,
            "grid_restricted": self.grid_restricted,
            "noisy": self.noisy,
            "instances": [
                {
                    "instance_id": o.instance_id,
                    "machine_id": o.machine_id,
                    "cpu_cores": o.config.cpu_cores,
                    "mem_gb": o.config.mem_gb,
                    "latency_s": o.latency_s,
                    "cost": o.cost,
                }
                for o in self.outcomes
            ],
        }
        if include_timing:
            d["solve_time_ms"] = self.solve_time_ms
            d["stage_latency_in_s"] = self.stage_latency_in_s
            d["timed_out"] = self.timed_out
        return d


def load_traces(
    stages_path: str | Path, machines_path: str | Path
) -> tuple[list[StageTrace], ClusterTrace]:
    """Read and validate the stage and machine trace files."""
    stages_raw = _read_json(stages_path)
    machines_raw = _read_json(machines_path)
    if not isinstance(stages_raw, list):
        raise TraceLoadError(f"{stages_path}: expected a JSON array of stages")
    stages = []
    for pos, entry in enumerate(stages_raw):
        sid = entry.get("stage_id", f"<entry {pos}>")
        try:
            instances = tuple(
                InstanceSpec(
                    id=int(i["id"]),
                    input_rows=int(i["input_rows"]),
                    input_bytes=int(i.get("input_bytes", 0)),
                )
                for i in entry["instances"]
            )
            cfg = ResourceConfig(**entry["default_config"])
            stages.append(StageTrace(int(entry["stage_id"]), instances, cfg))
        except ContractViolation as exc:
            raise TraceLoadError(f"{stages_path}: stage {sid}: {exc}") from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceLoadError(f"{stages_path}: stage {sid}: missing/invalid field {exc}") from exc
    if not isinstance(machines_raw, dict) or "machines" not in machines_raw:
        raise TraceLoadError(f'{machines_path}: expected an object with a "machines" array')
    try:
        cluster = ClusterTrace(
            tuple(
                MachineSpec(
                    id=int(m["id"]),
                    hw_class=str(m["hw_class"]),
                    cpu_util=float(m["cpu_util"]),
                    mem_util=float(m["mem_util"]),
                    cpu_capacity=float(m["cpu_capacity"]),
                    mem_capacity=float(m["mem_capacity"]),
                )
                for m in machines_raw["machines"]
            )
        )
    except ContractViolation as exc:
        raise TraceLoadError(f"{machines_path}: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceLoadError(f"{machines_path}: missing/invalid machine field {exc}") from exc
    return stages, cluster


def save_traces(
    stages: Sequence[StageTrace],
    cluster: ClusterTrace,
    stages_path: str | Path,
    machines_path: str | Path,
) -> None:
    stages_doc = [
        {
            "stage_id": s.stage_id,
            "default_config": {
                "cpu_cores": s.default_config.cpu_cores,
                "mem_gb": s.default_config.mem_gb,
            },
            "instances": [
                {"id": i.id, "input_rows": i.input_rows, "input_bytes": i.input_bytes}
                for i in s.instances
            ],
        }
        for s in stages
    ]
    machines_doc = {
        "machines": [
            {
                "id": m.id,
                "hw_class": m.hw_class,
                "cpu_util": m.cpu_util,
                "mem_util": m.mem_util,
                "cpu_capacity": m.cpu_capacity,
                "mem_capacity": m.mem_capacity,
            }
            for m in cluster.machines
        ]
    }
    _write_json(stages_doc, stages_path)
    _write_json(machines_doc, machines_path)


def generate_workload(
    seed: int,
    n_stages: int,
    m_range: tuple[int, int],
    n_machines: int,
    skew: float = 1.1,
    default_config: ResourceConfig = ResourceConfig(1.0, 4.0),
    hw_classes: Sequence[str] | None = None,
    row_levels: int = 1000,
    row_scale: int = 1000,
) -> tuple[list[StageTrace], ClusterTrace]:
    """Deterministic synthetic workload.

    Input rows follow a Zipf-like rank distribution (``skew=0`` makes them
    uniform); machine utilizations are uniform on [0, 1) and hardware
    classes cycle round-robin.
    """
    lo, hi = m_range
    if lo < 1 or hi < lo:
        raise ContractViolation(f"invalid m_range {m_range}")
    if n_stages < 1 or n_machines < 1:
        raise ContractViolation("need at least one stage and one machine")
    if skew < 0:
        raise ContractViolation("skew must be >= 0")
    rng = np.random.default_rng(seed)
    classes = tuple(hw_classes) if hw_classes else tuple(sorted(PredictorParams().hw_speed))
    machines = []
    cpu_caps = (8.0, 16.0, 32.0)
    for j in range(n_machines):
        cap = cpu_caps[int(rng.integers(len(cpu_caps)))]
        machines.append(
            MachineSpec(
                id=j,
                hw_class=classes[j % len(classes)],
                cpu_util=float(rng.uniform(0.0, 1.0)),
                mem_util=float(rng.uniform(0.0, 1.0)),
                cpu_capacity=cap,
                mem_capacity=cap * 4.0,
            )
        )
    ranks = np.arange(1, row_levels + 1, dtype=np.float64)
    probs = ranks**-skew
    probs /= probs.sum()
    stages = []
    for sid in range(n_stages):
        m = int(rng.integers(lo, hi + 1))
        levels = rng.choice(row_levels, size=m, p=probs) + 1
        instances = tuple(
            InstanceSpec(id=i, input_rows=int(levels[i]) * row_scale, input_bytes=int(levels[i]) * row_scale * 100)
            for i in range(m)
        )
        stages.append(StageTrace(sid, instances, default_config))
    return stages, ClusterTrace(tuple(machines))


def run_stage(
    stage: StageTrace,
    cluster: ClusterTrace,
    mode: str,
    config: HarnessConfig = HarnessConfig(),
) -> StageReport:
    """Solve one stage in one mode and report its metrics.

    With noise configured, per-instance latencies are sampled around the
    predictions (deterministically per stage id) and the metrics use the
    sampled values.
    """
    if mode not in MODES:
        raise ContractViolation(f"unknown mode {mode!r}, expected one of {MODES}")
    machines = cluster.machines
    m, n = len(stage.instances), len(machines)
    alpha = max(config.alpha, math.ceil(m / n))
    policy = CapacityPolicy(alpha=alpha, demand=stage.default_config)
    mach_by_id = {mach.id: mach for mach in machines}

    def latency_fn(inst: InstanceSpec, mach: MachineSpec) -> float:
        return max(predict(inst, stage.default_config, mach, config.predictor), config.min_latency)

    t0 = time.perf_counter()
    try:
        matrix = build_latency_matrix(
            stage.instances, stage.default_config, machines, config.predictor, config.min_latency
        )
        if mode == "fuxi":
            plan = fuxi_place(matrix, machines, policy, config.key_resource)
        elif mode == "ipa-clustered":
            plan = ipa_place_clustered(
                stage.instances,
                machines,
                policy,
                latency_fn,
                ClusterParams(bandwidth=config.bandwidth, buckets=config.buckets),
            )
        else:
            plan = ipa_place(matrix, compute_beta(machines, policy))

        grid_restricted = False
        if mode in ("ipa-raa-general", "ipa-raa-path"):
            configs, latencies, grid_restricted = _tune_resources(stage, plan, mach_by_id, config, mode)
        else:
            row = {iid: i for i, iid in enumerate(matrix.instance_ids)}
            col = {mid: j for j, mid in enumerate(matrix.machine_ids)}
            configs = {iid: stage.default_config for iid, _ in plan.assignment}
            latencies = {
                iid: float(matrix.values[row[iid], col[mid]]) for iid, mid in plan.assignment
            }
    except NoSolutionError as exc:
        raise NoSolutionError(f"stage {stage.stage_id}: {exc}") from exc
    solve_ms = (time.perf_counter() - t0) * 1000.0

    noisy = config.noise is not None and config.noise.sigma_fraction > 0
    if config.noise is not None:
        seed = int(
            np.random.SeedSequence([config.noise.seed, stage.stage_id]).generate_state(1, np.uint64)[0]
        )
        sampler = NoiseSampler(replace(config.noise, seed=seed))
        latencies = {
            iid: sampler.sample(latencies[iid]) for iid, _ in plan.assignment
        }

    outcomes = tuple(
        InstanceOutcome(
            instance_id=iid,
            machine_id=mid,
            config=configs[iid],
            latency_s=latencies[iid],
            cost=cost_of(latencies[iid], configs[iid], config.cost_weights),
        )
        for iid, mid in plan.assignment
    )
    return StageReport(
        stage_id=stage.stage_id,
        mode=mode,
        stage_latency_s=max(o.latency_s for o in outcomes),
        stage_cost=math.fsum(o.cost for o in outcomes),
        solve_time_ms=solve_ms,
        outcomes=outcomes,
        grid_restricted=grid_restricted,
        noisy=noisy,
        timed_out=solve_ms > config.timeout_s * 1000.0,
    )


def _tune_resources(
    stage: StageTrace,
    plan: PlacementPlan,
    mach_by_id: Mapping[int, MachineSpec],
    config: HarnessConfig,
    mode: str,
) -> tuple[dict[int, ResourceConfig], dict[int, float], bool]:
    """Per-instance resource tuning on a fixed placement.

    Each machine's free capacity is split evenly among its co-located
    instances; grid points beyond the share are dropped (falling back to the
    stage default when nothing fits).
    """
    inst_by_id = {inst.id: inst for inst in stage.instances}
    counts = plan.per_machine_counts()
    model = ObjectiveModel.latency_cost(config.predictor, config.cost_weights, config.min_latency)
    full_grid_size = len(config.grid.configs())
    restricted = False

    order = [iid for iid, _ in plan.assignment]
    frontiers: list[ParetoSet] = []
    for iid, mid in plan.assignment:
        inst, mach = inst_by_id[iid], mach_by_id[mid]
        share = counts[mid]
        max_cpu = mach.free_cpu / share
        max_mem = mach.free_mem / share
        if not config.grid.configs(max_cpu, max_mem):
            restricted = True
            frontiers.append(
                ParetoSet([(stage.default_config, model.evaluate(inst, stage.default_config, mach))])
            )
            continue
        if len(config.grid.configs(max_cpu, max_mem)) < full_grid_size:
            restricted = True
        frontiers.append(instance_pareto(inst, mach, config.grid, model, max_cpu, max_mem))

    problem = HierarchicalProblem(tuple(frontiers), _LATENCY_COST)
    if mode == "ipa-raa-path":
        solutions = raa_path(problem)
        idx = wun_recommend(solutions, config.wun_weights)
        state = solutions.state(idx)
    else:
        pairs = general_hierarchical_moo(problem)
        idx = wun_recommend(pairs, config.wun_weights)
        state = pairs[idx][0]
    chosen = solution_at(problem, state)

    configs: dict[int, ResourceConfig] = {}
    latencies: dict[int, float] = {}
    for pos, iid in enumerate(order):
        configs[iid] = chosen.configs[pos]
        latencies[iid] = float(problem.values_of(pos)[state[pos], 0])
    return configs, latencies, restricted


def _run_stage_task(args: tuple):
    stage, cluster, mode, config = args
    try:
        return run_stage(stage, cluster, mode, config)
    except NoSolutionError as exc:
        return {"stage_id": stage.stage_id, "mode": mode, "error": str(exc)}


def run_stages(
    stages: Sequence[StageTrace],
    cluster: ClusterTrace,
    mode: str,
    config: HarnessConfig = HarnessConfig(),
    workers: int = 1,
) -> tuple[list[StageReport], list[dict]]:
    """Run every stage, collecting reports and per-stage failures."""
    reports: list[StageReport] = []
    failures: list[dict] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tasks = [(s, cluster, mode, config) for s in stages]
            results = list(pool.map(_run_stage_task, tasks))
    else:
        results = [_run_stage_task((s, cluster, mode, config)) for s in stages]
    for result in results:
        if isinstance(result, StageReport):
            reports.append(result)
        else:
            failures.append(result)
    reports.sort(key=lambda r: r.stage_id)
    return reports, failures


def compare_report(reports_by_mode: Mapping[str, Sequence[StageReport]]) -> dict:
    """Cross-mode summary with reduction rates against the watermark baseline."""
    modes = list(reports_by_mode)
    if not modes:
        raise ContractViolation("no modes to compare")
    id_sets = {mode: tuple(sorted(r.stage_id for r in reports)) for mode, reports in reports_by_mode.items()}
    reference = id_sets[modes[0]]
    for mode, ids in id_sets.items():
        if ids != reference:
            raise ContractViolation(f"mode {mode} covers different stages than {modes[0]}")
    fuxi = {r.stage_id: r for r in reports_by_mode.get("fuxi", ())}
    summary: dict = {"stages": len(reference), "modes": {}}
    for mode in modes:
        reports = sorted(reports_by_mode[mode], key=lambda r: r.stage_id)
        lat = [r.stage_latency_s for r in reports]
        lat_in = [r.stage_latency_in_s for r in reports]
        cost = [r.stage_cost for r in reports]
        solve = [r.solve_time_ms for r in reports]
        entry = {
            "mean_stage_latency_s": float(np.mean(lat)),
            "mean_stage_latency_in_s": float(np.mean(lat_in)),
            "mean_stage_cost": float(np.mean(cost)),
            "mean_solve_ms": float(np.mean(solve)),
            "max_solve_ms": float(np.max(solve)),
        }
        if fuxi:
            fl = [fuxi[r.stage_id].stage_latency_s for r in reports]
            fc = [fuxi[r.stage_id].stage_cost for r in reports]
            entry["latency_reduction_vs_fuxi"] = 1.0 - float(np.mean(lat)) / float(np.mean(fl))
            entry["cost_reduction_vs_fuxi"] = 1.0 - float(np.mean(cost)) / float(np.mean(fc))
            entry["dominates_fuxi_fraction"] = float(
                np.mean(
                    [
                        r.stage_latency_s <= fuxi[r.stage_id].stage_latency_s
                        and r.stage_cost <= fuxi[r.stage_id].stage_cost
                        for r in reports
                    ]
                )
            )
        summary["modes"][mode] = entry
    return summary


def summary_csv_rows(summary: dict) -> list[list]:
    """Flatten a compare summary into CSV rows (header first)."""
    columns = [
        "mode",
        "mean_stage_latency_s",
        "mean_stage_latency_in_s",
        "mean_stage_cost",
        "mean_solve_ms",
        "max_solve_ms",
        "latency_reduction_vs_fuxi",
        "cost_reduction_vs_fuxi",
        "dominates_fuxi_fraction",
    ]
    rows = [columns]
    for mode, entry in summary["modes"].items():
        rows.append([mode] + [entry.get(c, "") for c in columns[1:]])
    return rows


def write_stage_reports(
    reports: Sequence[StageReport],
    failures: Sequence[dict],
    path: str | Path,
    include_timing: bool = False,
) -> None:
    doc = {
        "reports": [r.to_dict(include_timing=include_timing) for r in reports],
        "failures": list(failures),
    }
    _write_json(doc, path)


def write_timings(reports: Sequence[StageReport], path: str | Path) -> None:
    doc = [
        {"stage_id": r.stage_id, "mode": r.mode, "solve_time_ms": r.solve_time_ms}
        for r in reports
    ]
    _write_json(doc, path)


def _read_json(path: str | Path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise TraceLoadError(f"{path}: not found") from exc
    except json.JSONDecodeError as exc:
        raise TraceLoadError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def _write_json(doc, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
