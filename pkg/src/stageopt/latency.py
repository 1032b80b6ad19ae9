"""Analytic instance-latency predictor and the simulation noise sampler.

The predictor is a stand-in with the same (instance, config, machine)
signature as a learned model, shaped so that machine effects multiply a
per-instance factor: every column of a predicted latency matrix then ranks
instances identically, which the placement optimality arguments rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from stageopt.errors import ConfigurationError, ContractViolation
from stageopt.model import InstanceSpec, LatencyMatrix, MachineSpec, ResourceConfig

DEFAULT_HW_SPEED = {"gen1": 1.0, "gen2": 1.3, "gen3": 0.8}

DEFAULT_MIN_LATENCY = 0.001


@dataclass(frozen=True)
class PredictorParams:
    """Coefficients of the analytic latency model."""

    base_seconds_per_row: float = 0.001
    hw_speed: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_HW_SPEED))
    contention_coeff: float = 1.0
    cpu_exponent: float = 0.8
    mem_floor_gb: float = 2.0
    mem_penalty: float = 0.5

    def __post_init__(self) -> None:
        if not self.base_seconds_per_row > 0:
            raise ConfigurationError("base_seconds_per_row must be > 0")
        if not self.hw_speed or any(s <= 0 for s in self.hw_speed.values()):
            raise ConfigurationError("hw_speed multipliers must be > 0")
        if self.contention_coeff < 0:
            raise ConfigurationError("contention_coeff must be >= 0")
        if not 0 < self.cpu_exponent <= 1:
            raise ConfigurationError("cpu_exponent must be in (0, 1]")
        if not self.mem_floor_gb > 0:
            raise ConfigurationError("mem_floor_gb must be > 0")
        if self.mem_penalty < 0:
            raise ConfigurationError("mem_penalty must be >= 0")


@dataclass(frozen=True)
class NoiseParams:
    """Spread and seed of the actual-latency simulation."""

    sigma_fraction: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.sigma_fraction < 1 / 3:
            raise ConfigurationError(
                "sigma_fraction must be in [0, 1/3) so the truncated band stays positive"
            )


def predict(
    inst: InstanceSpec,
    cfg: ResourceConfig,
    mach: MachineSpec,
    params: PredictorParams,
) -> float:
    """Predicted latency in seconds (0.0 for an empty instance).

    Strictly increasing in input rows, strictly decreasing in CPU cores,
    non-decreasing in the machine's CPU utilization.
    """
    speed = params.hw_speed.get(mach.hw_class)
    if speed is None:
        raise ConfigurationError(f"unknown hw_class {mach.hw_class!r} for machine {mach.id}")
    base = params.base_seconds_per_row * inst.input_rows / speed
    contention = 1.0 + params.contention_coeff * mach.cpu_util
    shortage = max(0.0, params.mem_floor_gb - cfg.mem_gb) / params.mem_floor_gb
    return (
        base * contention / cfg.cpu_cores**params.cpu_exponent * (1.0 + params.mem_penalty * shortage)
    )


def build_latency_matrix(
    instances: Sequence[InstanceSpec],
    default_cfg: ResourceConfig,
    machines: Sequence[MachineSpec],
    params: PredictorParams,
    min_latency: float = DEFAULT_MIN_LATENCY,
) -> LatencyMatrix:
    """Predicted latencies of every instance on every machine, clamped to
    ``min_latency`` to keep empty instances out of degenerate territory."""
    if not instances or not machines:
        raise ContractViolation("need at least one instance and one machine")
    if not min_latency > 0:
        raise ConfigurationError("min_latency must be > 0")
    rows = np.array([inst.input_rows for inst in instances], dtype=np.float64)
    mach_factor = np.empty(len(machines), dtype=np.float64)
    for j, mach in enumerate(machines):
        speed = params.hw_speed.get(mach.hw_class)
        if speed is None:
            raise ConfigurationError(f"unknown hw_class {mach.hw_class!r} for machine {mach.id}")
        mach_factor[j] = (1.0 + params.contention_coeff * mach.cpu_util) / speed
    shortage = max(0.0, params.mem_floor_gb - default_cfg.mem_gb) / params.mem_floor_gb
    cfg_factor = (1.0 + params.mem_penalty * shortage) / default_cfg.cpu_cores**params.cpu_exponent
    values = np.outer(rows * params.base_seconds_per_row, mach_factor) * cfg_factor
    np.maximum(values, min_latency, out=values)
    return LatencyMatrix(
        values,
        instance_ids=[inst.id for inst in instances],
        machine_ids=[mach.id for mach in machines],
    )


class NoiseSampler:
    """Truncated-Gaussian actual-latency sampler with its own RNG stream.

    Each worker owns one sampler; draws are deterministic given the seed and
    draw order.
    """

    def __init__(self, params: NoiseParams):
        self.params = params
        self._rng = np.random.default_rng(params.seed)

    def sample(self, predicted: float) -> float:
        """Draw an actual latency within predicted*(1 +/- 3*sigma_fraction).

        Re-draws rather than clips, preserving the truncated shape.
        """
        if not predicted > 0:
            raise ContractViolation("predicted latency must be > 0")
        f = self.params.sigma_fraction
        if f == 0:
            return predicted
        lo = predicted * (1.0 - 3.0 * f)
        hi = predicted * (1.0 + 3.0 * f)
        sigma = f * predicted
        while True:
            x = self._rng.normal(predicted, sigma)
            if lo <= x <= hi:
                return float(x)


def sample_actual(predicted: float, noise: NoiseParams) -> float:
    """One-shot draw; prefer a shared :class:`NoiseSampler` for sequences."""
    return NoiseSampler(noise).sample(predicted)
