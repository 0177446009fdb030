"""
Energy Optimizer
==================
Combines the power model and the performance model into the energy estimate

    E(f, p, s, N) = P(f, p, s) * T(f, p, N)

and scans the whole configuration grid for the minimum-energy operating point.
Constraints are hard filters. Ties go to the higher frequency, then to fewer
cores.
"""

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt, model_validator

from energy_copilot.errors import EmptyInput, Infeasible
from energy_copilot.models.perf_model import PerfModel, predict_many, predict_with_flag
from energy_copilot.models.power_model import (
    Configuration,
    MachineSpec,
    PowerCoefficients,
    percentage_absolute_error,
    power_eval,
    power_eval_many,
)

logger = logging.getLogger(__name__)


# =============================================================================
# Domain types
# =============================================================================

class EnergyEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: Configuration
    power_w: PositiveFloat
    time_s: PositiveFloat
    energy_j: PositiveFloat
    time_clamped: bool = False


class Constraints(BaseModel):
    """Optional hard bounds on time, cores and frequency."""

    model_config = ConfigDict(frozen=True)

    max_time_s: PositiveFloat | None = None
    min_cores: PositiveInt | None = None
    max_cores: PositiveInt | None = None
    min_freq_ghz: PositiveFloat | None = None
    max_freq_ghz: PositiveFloat | None = None

    @model_validator(mode="after")
    def _consistent_bounds(self) -> "Constraints":
        if self.min_cores is not None and self.max_cores is not None and self.min_cores > self.max_cores:
            raise ValueError(f"min_cores {self.min_cores} > max_cores {self.max_cores}")
        if (
            self.min_freq_ghz is not None
            and self.max_freq_ghz is not None
            and self.min_freq_ghz > self.max_freq_ghz
        ):
            raise ValueError(f"min_freq_ghz {self.min_freq_ghz} > max_freq_ghz {self.max_freq_ghz}")
        return self

    def violations(self, estimate: EnergyEstimate) -> list[str]:
        """Names of the bounds the estimate breaks."""
        c = estimate.config
        broken = []
        if self.max_time_s is not None and estimate.time_s > self.max_time_s:
            broken.append("max_time_s")
        if self.min_cores is not None and c.cores < self.min_cores:
            broken.append("min_cores")
        if self.max_cores is not None and c.cores > self.max_cores:
            broken.append("max_cores")
        if self.min_freq_ghz is not None and c.freq_ghz < self.min_freq_ghz:
            broken.append("min_freq_ghz")
        if self.max_freq_ghz is not None and c.freq_ghz > self.max_freq_ghz:
            broken.append("max_freq_ghz")
        return broken

    def admits(self, estimate: EnergyEstimate) -> bool:
        return not self.violations(estimate)


class StrategyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    static_w: float
    dynamic_plus_leak_max_w: float
    race_to_idle_expected: bool
    max_config: Configuration


class EnergyValidation(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_runs: int
    mae_j: float
    pae: float


# =============================================================================
# Operations
# =============================================================================

def estimate(
    coeffs: PowerCoefficients,
    model: PerfModel,
    config: Configuration,
    input_size: float,
) -> EnergyEstimate:
    power = power_eval(coeffs, config)
    time_s, clamped = predict_with_flag(model, config.freq_ghz, config.cores, input_size)
    return EnergyEstimate(
        config=config, power_w=power, time_s=time_s, energy_j=power * time_s, time_clamped=clamped
    )


def selection_key(item: EnergyEstimate) -> tuple[float, float, int]:
    """Lowest energy; ties to the higher frequency, then fewer cores."""
    return (item.energy_j, -item.config.freq_ghz, item.config.cores)


def energy_surface(
    coeffs: PowerCoefficients,
    model: PerfModel,
    machine: MachineSpec,
    input_size: float,
) -> list[EnergyEstimate]:
    """Estimates for every configuration of the machine, frequency-major then cores."""
    configs = machine.configurations()
    freq = np.array([c.freq_ghz for c in configs])
    cores = np.array([c.cores for c in configs])
    sockets = np.array([c.sockets for c in configs])

    power = power_eval_many(coeffs, freq, cores, sockets)
    times, clamped = predict_many(model, np.column_stack([freq, cores, np.full(len(configs), float(input_size))]))
    return [
        EnergyEstimate(
            config=c,
            power_w=float(pw),
            time_s=float(t),
            energy_j=float(pw) * float(t),
            time_clamped=bool(cl),
        )
        for c, pw, t, cl in zip(configs, power, times, clamped)
    ]


def tightest_bound(full: Sequence[EnergyEstimate], constraints: Constraints) -> tuple[str, str]:
    """The bound that rejects the most configurations on its own."""
    counts: dict[str, int] = {}
    for item in full:
        for name in constraints.violations(item):
            counts[name] = counts.get(name, 0) + 1
    bound = max(counts, key=lambda name: (counts[name], name))

    if bound == "max_time_s":
        fastest = min(item.time_s for item in full)
        detail = f"max_time_s={constraints.max_time_s} s is below the fastest time {fastest:.6g} s"
    else:
        detail = f"{bound}={getattr(constraints, bound)} rejects {counts[bound]} of {len(full)} configurations"
    return bound, detail


def optimize(
    coeffs: PowerCoefficients,
    model: PerfModel,
    machine: MachineSpec,
    input_size: float,
    constraints: Constraints | None = None,
) -> tuple[EnergyEstimate, list[EnergyEstimate]]:
    """
    Exhaustive minimum-energy search.

    Returns the argmin and the constraint-filtered surface it was taken from,
    in frequency-major then cores order.

    Raises:
        Infeasible: no configuration passes the constraints.
    """
    constraints = constraints or Constraints()
    full = energy_surface(coeffs, model, machine, input_size)
    surface = [item for item in full if constraints.admits(item)]

    if not surface:
        bound, detail = tightest_bound(full, constraints)
        logger.warning(f"Infeasible constraints for input size {input_size}: {detail}")
        raise Infeasible(bound, detail)

    best = min(surface, key=selection_key)
    logger.info(
        f"Optimal configuration for input size {input_size}: {best.config.label()} "
        f"-> {best.power_w:.2f} W x {best.time_s:.3f} s = {best.energy_j:.1f} J "
        f"({len(surface)} of {len(full)} configurations admissible)"
    )
    return best, surface


def analyze_strategy(coeffs: PowerCoefficients, machine: MachineSpec) -> StrategyReport:
    """
    Race-to-idle diagnostic.

    When even the maximal configuration's per-core and per-socket parcel stays
    below the static power c3, finishing fast dominates and the highest
    frequency is expected to win.
    """
    top = Configuration(
        freq_ghz=machine.f_max, cores=machine.max_cores, sockets=machine.sockets_for(machine.max_cores)
    )
    f = top.freq_ghz
    parcel = top.cores * (coeffs.c1 * f**3 + coeffs.c2 * f) + coeffs.c4 * top.sockets
    return StrategyReport(
        static_w=coeffs.c3,
        dynamic_plus_leak_max_w=parcel,
        race_to_idle_expected=parcel < coeffs.c3,
        max_config=top,
    )


def validate_energy(
    coeffs: PowerCoefficients,
    model: PerfModel,
    measured: Sequence[tuple[Configuration, float, float]],
) -> EnergyValidation:
    """Modeled versus measured energy for (config, input_size, energy_j) runs."""
    if not measured:
        raise EmptyInput("energy validation needs at least one measured run")
    actual = np.array([energy for _, _, energy in measured], dtype=float)
    modeled = np.array([estimate(coeffs, model, cfg, size).energy_j for cfg, size, _ in measured])
    return EnergyValidation(
        n_runs=len(measured),
        mae_j=float(np.mean(np.abs(actual - modeled))),
        pae=percentage_absolute_error(actual, modeled),
    )
