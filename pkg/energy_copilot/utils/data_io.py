"""
Data I/O Utility
==================
File ingestion and serialization for the whole workflow:

- power-sample logs  `timestamp_s,watts,freq_ghz,cores,sockets`
- benchmark runs     `freq_ghz,cores,input_size,time_s`
- campaign plans     `freq_ghz,cores,input_size`
- energy surfaces    `freq_ghz,cores,sockets,power_w,time_s,energy_j`
- model documents    versioned JSON (power or performance model)

Readers reject unknown columns and wrong unit headers, and report the file line
of the first malformed row. Writers emit full-precision decimals and replace
their target atomically.

Usage:
    from energy_copilot.utils.data_io import read_power_csv, aggregate_traces

    traces = read_power_csv("power.csv")
    observations = aggregate_traces(traces, warmup_s=0.0)
"""

import json
import logging
import os
import tempfile
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, NonNegativeFloat, ValidationError, model_validator
from scipy.integrate import trapezoid

from energy_copilot.config import settings
from energy_copilot.errors import (
    EmptyInput,
    InvalidInput,
    NonMonotoneTimestamps,
    ParseError,
    SchemaMismatch,
    TooFewSamples,
    VersionMismatch,
)
from energy_copilot.models.perf_model import PerfModel, PerfSample
from energy_copilot.models.power_model import (
    Configuration,
    MachineSpec,
    PowerCoefficients,
    PowerFitReport,
    PowerObservation,
)
from energy_copilot.optimizer.energy_optimizer import EnergyEstimate

logger = logging.getLogger(__name__)

POWER_COLUMNS = ["timestamp_s", "watts", "freq_ghz", "cores", "sockets"]
PERF_COLUMNS = ["freq_ghz", "cores", "input_size", "time_s"]
PLAN_COLUMNS = ["freq_ghz", "cores", "input_size"]
SURFACE_COLUMNS = ["freq_ghz", "cores", "sockets", "power_w", "time_s", "energy_j"]
INTEGER_COLUMNS = {"cores", "sockets"}

FORMAT_VERSION = 1


# =============================================================================
# Domain types
# =============================================================================

class PowerTrace(BaseModel):
    """Sampled node power of one configuration."""

    model_config = ConfigDict(frozen=True)

    samples: list[tuple[float, NonNegativeFloat]]
    config: Configuration

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples], dtype=float)

    @property
    def watts(self) -> np.ndarray:
        return np.array([w for _, w in self.samples], dtype=float)


class CampaignPlan(BaseModel):
    """Characterization runs as (freq_ghz, cores, input_size) triples."""

    model_config = ConfigDict(frozen=True)

    runs: list[tuple[float, int, float]]

    @model_validator(mode="after")
    def _no_duplicates(self) -> "CampaignPlan":
        if len(set(self.runs)) != len(self.runs):
            raise ValueError("campaign plan contains duplicate runs")
        return self

    def __len__(self) -> int:
        return len(self.runs)


class PowerModelDocument(BaseModel):
    format_version: int = FORMAT_VERSION
    kind: Literal["power_model"] = "power_model"
    coefficients: PowerCoefficients
    fit: PowerFitReport | None = None


class PerfModelDocument(BaseModel):
    format_version: int = FORMAT_VERSION
    kind: Literal["perf_model"] = "perf_model"
    model: PerfModel


_DOCUMENTS = {"power_model": PowerModelDocument, "perf_model": PerfModelDocument}


# =============================================================================
# Power traces
# =============================================================================

def _check_timestamps(trace: PowerTrace) -> None:
    t = trace.timestamps
    if np.any(np.diff(t) <= 0):
        first = int(np.argmax(np.diff(t) <= 0)) + 1
        raise NonMonotoneTimestamps(
            f"timestamps must be strictly increasing; sample {first} at t={t[first]} follows t={t[first - 1]}"
        )


def integrate_energy(trace: PowerTrace) -> float:
    """Trapezoidal integral of power over time, in joules."""
    if len(trace.samples) < 2:
        raise TooFewSamples(f"energy integration needs at least 2 samples, got {len(trace.samples)}")
    _check_timestamps(trace)
    return float(trapezoid(trace.watts, trace.timestamps))


def aggregate_power(trace: PowerTrace, warmup_s: float = settings.warmup_s) -> PowerObservation:
    """Mean power after dropping the first warmup_s seconds of the trace."""
    if not trace.samples:
        raise TooFewSamples("power trace is empty")
    _check_timestamps(trace)
    t, w = trace.timestamps, trace.watts
    steady = w[t >= t[0] + warmup_s]
    if steady.size == 0:
        raise TooFewSamples(
            f"no samples left after a {warmup_s} s warmup (trace spans {t[-1] - t[0]} s) for {trace.config.label()}"
        )
    if steady.mean() <= 0:
        raise InvalidInput(f"mean power of {trace.config.label()} is {steady.mean()} W; expected a positive draw")
    return PowerObservation(config=trace.config, mean_watts=float(steady.mean()), sample_count=int(steady.size))


def aggregate_traces(traces: Sequence[PowerTrace], warmup_s: float = settings.warmup_s) -> list[PowerObservation]:
    return [aggregate_power(trace, warmup_s) for trace in traces]


# =============================================================================
# Campaign planning
# =============================================================================

def plan_campaign(machine: MachineSpec, input_sizes: Sequence[float]) -> CampaignPlan:
    """Full Cartesian product freq x cores x input size, frequency-major."""
    if not input_sizes:
        raise EmptyInput("campaign plan needs at least one input size")
    if len(set(input_sizes)) != len(input_sizes):
        raise InvalidInput(f"input sizes must be distinct, got {list(input_sizes)}")
    runs = [
        (f, p, float(n))
        for f in machine.freq_grid_ghz
        for p in range(1, machine.max_cores + 1)
        for n in input_sizes
    ]
    logger.info(
        f"Campaign planned: {len(machine.freq_grid_ghz)} frequencies x {machine.max_cores} cores "
        f"x {len(input_sizes)} input sizes = {len(runs)} runs"
    )
    return CampaignPlan(runs=runs)


# =============================================================================
# CSV helpers
# =============================================================================

def _atomic_write(path: str | Path, write: Callable[[Path], None]) -> Path:
    """Write through a temp file in the target directory, then rename over the target."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    os.close(fd)
    tmp = Path(tmp_name)
    try:
        write(tmp)
        os.replace(tmp, target)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    logger.info(f"Wrote {target}")
    return target


def write_frame(df: pd.DataFrame, path: str | Path, header_comment: str | None = None) -> Path:
    def write(tmp: Path) -> None:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            if header_comment:
                for line in header_comment.splitlines():
                    fh.write(f"# {line}\n")
            df.to_csv(fh, index=False, lineterminator="\n")

    return _atomic_write(path, write)


def _unit_hint(column: str, expected: Sequence[str]) -> str | None:
    stem = column.rsplit("_", 1)[0]
    for name in expected:
        if name.rsplit("_", 1)[0] == stem and name != column:
            return f"column '{column}' has the wrong unit; expected '{name}'"
    return None


def _check_header(columns: Sequence[str], expected: Sequence[str], path: Path) -> None:
    unknown = [c for c in columns if c not in expected]
    for column in unknown:
        hint = _unit_hint(column, expected)
        if hint:
            raise SchemaMismatch(f"{path}: {hint}")
    if unknown:
        raise SchemaMismatch(f"{path}: unknown column(s) {unknown}; expected {list(expected)}")
    missing = [c for c in expected if c not in columns]
    if missing:
        raise SchemaMismatch(f"{path}: missing column(s) {missing}; expected {list(expected)}")


def _as_float(text: str) -> float:
    # float() round-trips repr output exactly; pandas' fast parser does not.
    try:
        return float(text)
    except ValueError:
        return np.nan


def _read_table(path: str | Path, expected: Sequence[str]) -> pd.DataFrame:
    """Read a CSV with an exact header into numeric columns, reporting bad rows by line."""
    path = Path(path)
    try:
        raw = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            skip_blank_lines=False,
        )
    except pd.errors.EmptyDataError as exc:
        raise SchemaMismatch(f"{path}: file is empty; expected header {list(expected)}") from exc
    except pd.errors.ParserError as exc:
        raise ParseError(line=0, reason=str(exc), path=str(path)) from exc

    raw.columns = [str(c).strip() for c in raw.columns]
    _check_header(list(raw.columns), expected, path)

    frame = pd.DataFrame(index=raw.index)
    for column in expected:
        values = raw[column].str.strip().map(_as_float).astype(float)
        bad = values.isna() | ~np.isfinite(values)
        if bad.any():
            row = int(np.argmax(bad.to_numpy()))
            raise ParseError(
                line=row + 2,
                reason=f"{column}={raw[column].iloc[row]!r} is not a finite number",
                path=str(path),
            )
        if column in INTEGER_COLUMNS:
            fractional = values != np.round(values)
            if fractional.any():
                row = int(np.argmax(fractional.to_numpy()))
                raise ParseError(line=row + 2, reason=f"{column}={raw[column].iloc[row]!r} is not an integer", path=str(path))
            values = values.astype(int)
        frame[column] = values
    return frame


def _require(frame: pd.DataFrame, mask: pd.Series, reason: str, path: str | Path) -> None:
    """Raise on the first row where mask is False."""
    if not mask.all():
        row = int(np.argmax(~mask.to_numpy()))
        raise ParseError(line=row + 2, reason=f"{reason} (got {frame.iloc[row].to_dict()})", path=str(path))


# =============================================================================
# Power CSV
# =============================================================================

def read_power_csv(path: str | Path, machine: MachineSpec | None = None) -> list[PowerTrace]:
    """One PowerTrace per configuration, in order of first appearance."""
    frame = _read_table(path, POWER_COLUMNS)
    _require(frame, frame["watts"] >= 0, "watts must be non-negative", path)
    _require(frame, frame["freq_ghz"] > 0, "freq_ghz must be positive", path)
    _require(frame, frame["cores"] >= 1, "cores must be at least 1", path)
    _require(frame, frame["sockets"] >= 1, "sockets must be at least 1", path)

    keys = list(zip(frame["freq_ghz"], frame["cores"], frame["sockets"]))
    last_time: dict[tuple, float] = {}
    rows: dict[tuple, list[tuple[float, float]]] = {}
    for index, (key, t, w) in enumerate(zip(keys, frame["timestamp_s"], frame["watts"])):
        if key in last_time and t <= last_time[key]:
            raise ParseError(
                line=index + 2,
                reason=f"timestamp_s={t} does not increase (previous {last_time[key]}) for configuration {key}",
                path=str(path),
            )
        if key not in rows:
            if machine is not None:
                try:
                    machine.validate_config(Configuration(freq_ghz=key[0], cores=key[1], sockets=key[2]))
                except InvalidInput as exc:
                    raise ParseError(line=index + 2, reason=str(exc), path=str(path)) from exc
            rows[key] = []
        last_time[key] = t
        rows[key].append((float(t), float(w)))

    traces = [
        PowerTrace(samples=samples, config=Configuration(freq_ghz=float(f), cores=int(p), sockets=int(s)))
        for (f, p, s), samples in rows.items()
    ]
    logger.info(f"Read {len(frame)} power samples covering {len(traces)} configurations from {path}")
    return traces


def write_power_csv(traces: Sequence[PowerTrace], path: str | Path) -> Path:
    records = [
        (t, w, trace.config.freq_ghz, trace.config.cores, trace.config.sockets)
        for trace in traces
        for t, w in trace.samples
    ]
    return write_frame(pd.DataFrame.from_records(records, columns=POWER_COLUMNS), path)


# =============================================================================
# Performance CSV
# =============================================================================

def read_perf_csv(path: str | Path) -> list[PerfSample]:
    frame = _read_table(path, PERF_COLUMNS)
    _require(frame, frame["time_s"] > 0, "time_s must be positive", path)
    _require(frame, frame["freq_ghz"] > 0, "freq_ghz must be positive", path)
    _require(frame, frame["cores"] >= 1, "cores must be at least 1", path)
    samples = [
        PerfSample(freq_ghz=float(f), cores=int(p), input_size=float(n), time_s=float(t))
        for f, p, n, t in frame[PERF_COLUMNS].itertuples(index=False, name=None)
    ]
    logger.info(f"Read {len(samples)} benchmark runs from {path}")
    return samples


def write_perf_csv(samples: Sequence[PerfSample], path: str | Path) -> Path:
    records = [(s.freq_ghz, s.cores, s.input_size, s.time_s) for s in samples]
    return write_frame(pd.DataFrame.from_records(records, columns=PERF_COLUMNS), path)


# =============================================================================
# Campaign plan CSV
# =============================================================================

def write_plan_csv(plan: CampaignPlan, path: str | Path) -> Path:
    return write_frame(pd.DataFrame.from_records(plan.runs, columns=PLAN_COLUMNS), path)


def read_plan_csv(path: str | Path) -> CampaignPlan:
    frame = _read_table(path, PLAN_COLUMNS)
    runs = [(float(f), int(p), float(n)) for f, p, n in frame[PLAN_COLUMNS].itertuples(index=False, name=None)]
    try:
        return CampaignPlan(runs=runs)
    except ValidationError as exc:
        raise SchemaMismatch(f"{path}: {exc.errors()[0]['msg']}") from exc


# =============================================================================
# Energy surface CSV
# =============================================================================

def write_surface_csv(surface: Sequence[EnergyEstimate], path: str | Path) -> Path:
    records = [
        (e.config.freq_ghz, e.config.cores, e.config.sockets, e.power_w, e.time_s, e.energy_j)
        for e in surface
    ]
    return write_frame(pd.DataFrame.from_records(records, columns=SURFACE_COLUMNS), path)


def read_surface_csv(path: str | Path) -> list[EnergyEstimate]:
    frame = _read_table(path, SURFACE_COLUMNS)
    for column in ("power_w", "time_s", "energy_j"):
        _require(frame, frame[column] > 0, f"{column} must be positive", path)
    return [
        EnergyEstimate(
            config=Configuration(freq_ghz=float(f), cores=int(p), sockets=int(s)),
            power_w=float(pw),
            time_s=float(t),
            energy_j=float(e),
        )
        for f, p, s, pw, t, e in frame[SURFACE_COLUMNS].itertuples(index=False, name=None)
    ]


# =============================================================================
# Model documents
# =============================================================================

def save_model(
    model: PowerCoefficients | PerfModel,
    path: str | Path,
    fit: PowerFitReport | None = None,
) -> Path:
    """Write a versioned JSON model document."""
    if isinstance(model, PowerCoefficients):
        document: BaseModel = PowerModelDocument(coefficients=model, fit=fit)
    elif isinstance(model, PerfModel):
        document = PerfModelDocument(model=model)
    else:
        raise InvalidInput(f"cannot serialize {type(model).__name__} as a model document")

    text = document.model_dump_json(indent=2) + "\n"

    def write(tmp: Path) -> None:
        tmp.write_text(text, encoding="utf-8")

    return _atomic_write(path, write)


def load_document(path: str | Path) -> PowerModelDocument | PerfModelDocument:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(line=exc.lineno, reason=f"invalid JSON: {exc.msg}", path=str(path)) from exc
    if not isinstance(data, dict):
        raise SchemaMismatch(f"{path}: model document must be a JSON object")

    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format_version {version!r} is not supported (expected {FORMAT_VERSION})")
    kind = data.get("kind")
    if kind not in _DOCUMENTS:
        raise SchemaMismatch(f"{path}: unknown document kind {kind!r}; expected one of {sorted(_DOCUMENTS)}")

    try:
        return _DOCUMENTS[kind].model_validate(data)
    except ValidationError as exc:
        raise SchemaMismatch(f"{path}: invalid {kind} document: {exc}") from exc


def load_model(path: str | Path) -> PowerCoefficients | PerfModel:
    document = load_document(path)
    if isinstance(document, PowerModelDocument):
        return document.coefficients
    return document.model


def load_power_model(path: str | Path) -> PowerCoefficients:
    model = load_model(path)
    if not isinstance(model, PowerCoefficients):
        raise SchemaMismatch(f"{path}: expected a power_model document, found a perf_model document")
    return model


def load_perf_model(path: str | Path) -> PerfModel:
    model = load_model(path)
    if not isinstance(model, PerfModel):
        raise SchemaMismatch(f"{path}: expected a perf_model document, found a power_model document")
    return model
