"""Command-line interface: generate workloads, solve stages, compare modes,
and spot-check the greedy solver against the brute-force reference."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from stageopt import harness, oracle
from stageopt.errors import TraceLoadError
from stageopt.harness import HarnessConfig
from stageopt.instance_moo import ConfigGrid
from stageopt.latency import NoiseParams
from stageopt.model import LatencyMatrix
from stageopt.placement import ipa_place, stage_latency_of


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TraceLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stageopt")
    sub = parser.add_subparsers(required=True)

    gen = sub.add_parser("generate", help="write a synthetic stage/machine trace pair")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n-stages", type=int, default=100)
    gen.add_argument("--n-machines", type=int, default=50)
    gen.add_argument("--m-range", type=_int_pair, default=(2, 20))
    gen.add_argument("--skew", type=float, default=1.1)
    gen.add_argument("--out-stages", required=True)
    gen.add_argument("--out-machines", required=True)
    gen.set_defaults(func=_cmd_generate)

    solve = sub.add_parser("solve", help="solve every stage in one mode")
    _add_run_flags(solve)
    solve.add_argument("--mode", choices=harness.MODES, default="ipa-raa-path")
    solve.add_argument("--out", required=True)
    solve.add_argument("--timings", help="optional sidecar for wall-clock solve times")
    solve.set_defaults(func=_cmd_solve)

    comp = sub.add_parser("compare", help="run several modes and summarize")
    _add_run_flags(comp)
    comp.add_argument("--modes", type=_mode_list, default=("fuxi", "ipa", "ipa-raa-path"))
    comp.add_argument("--out", required=True)
    comp.add_argument("--out-csv")
    comp.set_defaults(func=_cmd_compare)

    check = sub.add_parser(
        "oracle-check", help="verify greedy placement against brute force on random matrices"
    )
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--trials", type=int, default=200)
    check.add_argument("--m-max", type=int, default=7)
    check.add_argument("--n-max", type=int, default=9)
    check.set_defaults(func=_cmd_oracle_check)
    return parser


def _add_run_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--stages", required=True, help="stage trace JSON path")
    cmd.add_argument("--machines", required=True, help="machine trace JSON path")
    cmd.add_argument("--config", help="harness config JSON (flags below override it)")
    cmd.add_argument("--alpha", type=int)
    cmd.add_argument("--buckets", type=int)
    cmd.add_argument("--grid", help="JSON file with cpu_choices/mem_choices")
    cmd.add_argument("--wun-weights", type=_float_pair)
    cmd.add_argument("--noise-sigma", type=float)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--workers", type=int, default=1)


def _config_from(args: argparse.Namespace) -> HarnessConfig:
    config = HarnessConfig.load(args.config) if args.config else HarnessConfig()
    if args.alpha is not None:
        config = replace(config, alpha=args.alpha)
    if args.buckets is not None:
        config = replace(config, buckets=args.buckets)
    if args.grid:
        raw = json.loads(Path(args.grid).read_text())
        config = replace(
            config, grid=ConfigGrid(tuple(raw["cpu_choices"]), tuple(raw["mem_choices"]))
        )
    if args.wun_weights is not None:
        config = replace(config, wun_weights=args.wun_weights)
    if args.noise_sigma is not None:
        config = replace(config, noise=NoiseParams(args.noise_sigma, args.seed))
    return config


def _cmd_generate(args: argparse.Namespace) -> int:
    stages, cluster = harness.generate_workload(
        seed=args.seed,
        n_stages=args.n_stages,
        m_range=args.m_range,
        n_machines=args.n_machines,
        skew=args.skew,
    )
    harness.save_traces(stages, cluster, args.out_stages, args.out_machines)
    print(f"wrote {len(stages)} stages to {args.out_stages}, "
          f"{len(cluster.machines)} machines to {args.out_machines}")
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    stages, cluster = harness.load_traces(args.stages, args.machines)
    config = _config_from(args)
    reports, failures = harness.run_stages(stages, cluster, args.mode, config, args.workers)
    harness.write_stage_reports(reports, failures, args.out)
    if args.timings:
        harness.write_timings(reports, args.timings)
    print(f"{args.mode}: solved {len(reports)}/{len(stages)} stages -> {args.out}")
    for failure in failures:
        print(f"  no solution: stage {failure['stage_id']}: {failure['error']}", file=sys.stderr)
    return 0 if not failures else 1


def _cmd_compare(args: argparse.Namespace) -> int:
    stages, cluster = harness.load_traces(args.stages, args.machines)
    config = _config_from(args)
    by_mode = {}
    any_failures = False
    for mode in args.modes:
        reports, failures = harness.run_stages(stages, cluster, mode, config, args.workers)
        any_failures = any_failures or bool(failures)
        by_mode[mode] = reports
    common = set.intersection(*(set(r.stage_id for r in reps) for reps in by_mode.values()))
    by_mode = {
        mode: [r for r in reps if r.stage_id in common] for mode, reps in by_mode.items()
    }
    summary = harness.compare_report(by_mode)
    Path(args.out).write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    csv_path = args.out_csv or str(Path(args.out).with_suffix(".csv"))
    with open(csv_path, "w", newline="") as fh:
        csv.writer(fh).writerows(harness.summary_csv_rows(summary))
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0 if not any_failures else 1


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    mismatches = 0
    for _ in range(args.trials):
        m = int(rng.integers(2, args.m_max + 1))
        n = int(rng.integers(m, args.n_max + 1))
        inst = np.sort(rng.uniform(1.0, 100.0, size=m))[::-1]
        mach = rng.uniform(0.5, 5.0, size=n)
        matrix = LatencyMatrix(np.outer(inst, mach))
        beta = rng.integers(0, 3, size=n)
        while beta.sum() < m:
            beta[int(rng.integers(n))] += 1
        plan, best = oracle.brute_force_placement(matrix, beta)
        greedy = stage_latency_of(ipa_place(matrix, beta), matrix)
        if greedy != best:
            mismatches += 1
    print(f"oracle-check: {args.trials} trials, {mismatches} mismatches")
    return 0 if mismatches == 0 else 1


def _int_pair(text: str) -> tuple[int, int]:
    a, b = text.split(",")
    return int(a), int(b)


def _float_pair(text: str) -> tuple[float, float]:
    a, b = text.split(",")
    return float(a), float(b)


def _mode_list(text: str) -> tuple[str, ...]:
    modes = tuple(t.strip() for t in text.split(","))
    for mode in modes:
        if mode not in harness.MODES:
            raise argparse.ArgumentTypeError(f"unknown mode {mode!r}")
    return modes


if __name__ == "__main__":
    sys.exit(main())
