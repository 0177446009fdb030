"""
Power Model
=============
Application-agnostic CPU power model of a multi-socket node:

    P(f, p, s) = p * (c1 * f^3 + c2 * f) + c3 + c4 * s

f is the core frequency in GHz, p the number of active cores and s the number
of active sockets. The cubic term is the CMOS dynamic power (C V^2 f with V
roughly proportional to f), the linear term is leakage, c3 the static power of
the node and c4 the per-socket overhead.

Coefficients are fitted from per-configuration mean power by multi-linear least
squares. Units are fixed everywhere: GHz, watts, seconds, joules.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, FiniteFloat, PositiveFloat, PositiveInt, field_validator

from energy_copilot.errors import (
    EmptyInput,
    InvalidInput,
    LengthMismatch,
    RankDeficientDesign,
    TooFewSamples,
    ZeroActualValue,
)

logger = logging.getLogger(__name__)

DESIGN_COLUMNS = ("p*f^3", "p*f", "intercept", "sockets")

# Relative tolerance used to match a frequency against the machine grid.
FREQ_MATCH_RTOL = 1e-9


# =============================================================================
# Domain types
# =============================================================================

class Configuration(BaseModel):
    """One candidate operating point: frequency, active cores, active sockets."""

    model_config = ConfigDict(frozen=True)

    freq_ghz: PositiveFloat
    cores: PositiveInt
    sockets: PositiveInt

    def label(self) -> str:
        return f"{self.freq_ghz:.1f} GHz x {self.cores} cores ({self.sockets} socket{'s' if self.sockets > 1 else ''})"


class MachineSpec(BaseModel):
    """Admissible frequencies and core/socket topology of the target node."""

    model_config = ConfigDict(frozen=True)

    freq_grid_ghz: tuple[PositiveFloat, ...]
    cores_per_socket: PositiveInt
    num_sockets: PositiveInt

    @field_validator("freq_grid_ghz")
    @classmethod
    def _strictly_increasing(cls, grid: tuple[float, ...]) -> tuple[float, ...]:
        if not grid:
            raise ValueError("frequency grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("frequency grid must be strictly increasing")
        return grid

    @classmethod
    def from_range(
        cls,
        freq_min_ghz: float,
        freq_max_ghz: float,
        step_ghz: float,
        cores_per_socket: int,
        num_sockets: int,
    ) -> "MachineSpec":
        """Evenly stepped grid from freq_min to freq_max inclusive."""
        if step_ghz <= 0 or freq_max_ghz < freq_min_ghz:
            raise InvalidInput(
                f"invalid frequency range {freq_min_ghz}..{freq_max_ghz} step {step_ghz}"
            )
        n_steps = int(round((freq_max_ghz - freq_min_ghz) / step_ghz))
        grid = tuple(round(freq_min_ghz + i * step_ghz, 6) for i in range(n_steps + 1))
        return cls(freq_grid_ghz=grid, cores_per_socket=cores_per_socket, num_sockets=num_sockets)

    @classmethod
    def reference_node(cls) -> "MachineSpec":
        """Two sixteen-core sockets, 1.2-2.2 GHz in 100 MHz steps."""
        return cls.from_range(1.2, 2.2, 0.1, cores_per_socket=16, num_sockets=2)

    @property
    def max_cores(self) -> int:
        return self.cores_per_socket * self.num_sockets

    @property
    def f_min(self) -> float:
        return self.freq_grid_ghz[0]

    @property
    def f_max(self) -> float:
        return self.freq_grid_ghz[-1]

    def sockets_for(self, cores: int) -> int:
        """Packing policy: fill one socket before enabling the next."""
        return math.ceil(cores / self.cores_per_socket)

    def has_frequency(self, freq_ghz: float) -> bool:
        return any(math.isclose(freq_ghz, f, rel_tol=FREQ_MATCH_RTOL) for f in self.freq_grid_ghz)

    def snap_frequency(self, freq_ghz: float) -> float:
        """Return the grid value equal to freq_ghz, or raise."""
        for f in self.freq_grid_ghz:
            if math.isclose(freq_ghz, f, rel_tol=FREQ_MATCH_RTOL):
                return f
        raise InvalidInput(f"frequency {freq_ghz} GHz is not on the machine grid {list(self.freq_grid_ghz)}")

    def configuration(self, freq_ghz: float, cores: int) -> Configuration:
        """Validated configuration with the socket count derived by packing."""
        freq = self.snap_frequency(freq_ghz)
        if not 1 <= cores <= self.max_cores:
            raise InvalidInput(f"cores must be in 1..{self.max_cores}, got {cores}")
        return Configuration(freq_ghz=freq, cores=cores, sockets=self.sockets_for(cores))

    def configurations(self) -> list[Configuration]:
        """Every admissible configuration, frequency-major then cores."""
        return [
            Configuration(freq_ghz=f, cores=p, sockets=self.sockets_for(p))
            for f in self.freq_grid_ghz
            for p in range(1, self.max_cores + 1)
        ]

    def validate_config(self, config: Configuration) -> None:
        if not self.has_frequency(config.freq_ghz):
            raise InvalidInput(f"frequency {config.freq_ghz} GHz is not on the machine grid")
        if not 1 <= config.cores <= self.max_cores:
            raise InvalidInput(f"cores must be in 1..{self.max_cores}, got {config.cores}")
        if config.sockets != self.sockets_for(config.cores):
            raise InvalidInput(
                f"{config.cores} cores pack onto {self.sockets_for(config.cores)} sockets, got {config.sockets}"
            )


class PowerCoefficients(BaseModel):
    """Fitted c1..c4 (W/GHz^3, W/GHz, W, W/socket)."""

    model_config = ConfigDict(frozen=True)

    c1: FiniteFloat
    c2: FiniteFloat
    c3: FiniteFloat
    c4: FiniteFloat

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "PowerCoefficients":
        c1, c2, c3, c4 = (float(v) for v in values)
        return cls(c1=c1, c2=c2, c3=c3, c4=c4)

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3, self.c4], dtype=float)

    def implausible_terms(self) -> list[str]:
        issues = []
        if self.c1 <= 0:
            issues.append("c1 <= 0")
        if self.c2 < 0:
            issues.append("c2 < 0")
        return issues

    @property
    def is_plausible(self) -> bool:
        return not self.implausible_terms()


# Coefficients fitted on the two-socket Xeon node of the reference campaign.
REFERENCE_COEFFICIENTS = PowerCoefficients(c1=0.29, c2=0.97, c3=198.59, c4=9.18)


class PowerObservation(BaseModel):
    """Steady-state mean power of one configuration."""

    model_config = ConfigDict(frozen=True)

    config: Configuration
    mean_watts: PositiveFloat
    sample_count: PositiveInt = 1


class PowerBreakdown(BaseModel):
    model_config = ConfigDict(frozen=True)

    dynamic_w: float
    leakage_w: float
    static_w: float
    socket_w: float
    total_w: float


class PowerFitReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_observations: int
    pae: float
    rmse_w: float
    plausible: bool
    implausible_terms: list[str] = []


# =============================================================================
# Evaluation
# =============================================================================

def power_eval(coeffs: PowerCoefficients, config: Configuration) -> float:
    """Total node power in watts for one configuration."""
    f = config.freq_ghz
    return config.cores * (coeffs.c1 * f**3 + coeffs.c2 * f) + coeffs.c3 + coeffs.c4 * config.sockets


def power_eval_many(
    coeffs: PowerCoefficients,
    freq_ghz: np.ndarray,
    cores: np.ndarray,
    sockets: np.ndarray,
) -> np.ndarray:
    """Vectorized power_eval over aligned arrays."""
    f = np.asarray(freq_ghz, dtype=float)
    p = np.asarray(cores, dtype=float)
    s = np.asarray(sockets, dtype=float)
    return p * (coeffs.c1 * f**3 + coeffs.c2 * f) + coeffs.c3 + coeffs.c4 * s


def split_power(coeffs: PowerCoefficients, config: Configuration) -> PowerBreakdown:
    f, p = config.freq_ghz, config.cores
    return PowerBreakdown(
        dynamic_w=p * coeffs.c1 * f**3,
        leakage_w=p * coeffs.c2 * f,
        static_w=coeffs.c3,
        socket_w=coeffs.c4 * config.sockets,
        total_w=power_eval(coeffs, config),
    )


# =============================================================================
# Fitting
# =============================================================================

def _design_matrix(observations: Sequence[PowerObservation]) -> tuple[np.ndarray, np.ndarray]:
    f = np.array([o.config.freq_ghz for o in observations], dtype=float)
    p = np.array([o.config.cores for o in observations], dtype=float)
    s = np.array([o.config.sockets for o in observations], dtype=float)
    y = np.array([o.mean_watts for o in observations], dtype=float)
    X = np.column_stack([p * f**3, p * f, np.ones_like(f), s])
    return X, y


def _collinear_columns(X_scaled: np.ndarray, rank: int) -> list[str]:
    """Names of the columns that take part in the design's null space."""
    _, _, vt = np.linalg.svd(X_scaled, full_matrices=False)
    null_space = vt[rank:]
    involved = np.any(np.abs(null_space) > 1e-6, axis=0)
    return [name for name, hit in zip(DESIGN_COLUMNS, involved) if hit]


def fit_power(observations: Sequence[PowerObservation]) -> PowerCoefficients:
    """
    Least-squares fit of c1..c4 to per-configuration mean power.

    The design columns [p*f^3, p*f, 1, s] are equilibrated to unit norm and the
    problem is solved with an SVD-based solver; the normal equations are never
    formed.

    Raises:
        TooFewSamples: fewer than four observations.
        RankDeficientDesign: the columns are numerically collinear (for example a
            single socket count, which makes the socket column a multiple of the
            intercept).
    """
    if len(observations) < len(DESIGN_COLUMNS):
        raise TooFewSamples(
            f"power fit needs at least {len(DESIGN_COLUMNS)} observations, got {len(observations)}"
        )

    X, y = _design_matrix(observations)
    norms = np.linalg.norm(X, axis=0)
    X_scaled = X / norms

    rank = int(np.linalg.matrix_rank(X_scaled))
    if rank < X.shape[1]:
        columns = _collinear_columns(X_scaled, rank)
        raise RankDeficientDesign(
            f"power design matrix has rank {rank} < {X.shape[1]}; collinear columns: {', '.join(columns)}",
            columns=columns,
        )

    solution, *_ = np.linalg.lstsq(X_scaled, y, rcond=None)
    coeffs = PowerCoefficients.from_array(solution / norms)

    if not coeffs.is_plausible:
        logger.warning(
            f"Fitted power model is not physically plausible ({', '.join(coeffs.implausible_terms())}): {coeffs}"
        )
    logger.info(
        f"Power model fitted on {len(observations)} observations: "
        f"c1={coeffs.c1:.6g} c2={coeffs.c2:.6g} c3={coeffs.c3:.6g} c4={coeffs.c4:.6g}"
    )
    return coeffs


# =============================================================================
# Metrics
# =============================================================================

def _paired(actual: Sequence[float], predicted: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.size == 0:
        raise EmptyInput("metrics need at least one value")
    if a.shape != p.shape:
        raise LengthMismatch(f"actual has {a.size} values, predicted has {p.size}")
    return a, p


def percentage_absolute_error(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean of |y - y_hat| / y, as a fraction (0.01 is 1%)."""
    a, p = _paired(actual, predicted)
    if np.any(a == 0):
        raise ZeroActualValue("percentage error is undefined for a zero actual value")
    return float(np.mean(np.abs(a - p) / np.abs(a)))


def rmse(actual: Sequence[float], predicted: Sequence[float]) -> float:
    a, p = _paired(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def fit_report(coeffs: PowerCoefficients, observations: Sequence[PowerObservation]) -> PowerFitReport:
    """Fit quality on the same per-configuration means used for fitting."""
    if not observations:
        raise EmptyInput("fit report needs observations")
    actual = [o.mean_watts for o in observations]
    predicted = [power_eval(coeffs, o.config) for o in observations]
    return PowerFitReport(
        n_observations=len(observations),
        pae=percentage_absolute_error(actual, predicted),
        rmse_w=rmse(actual, predicted),
        plausible=coeffs.is_plausible,
        implausible_terms=coeffs.implausible_terms(),
    )
