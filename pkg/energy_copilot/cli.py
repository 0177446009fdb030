"""
Energy Copilot CLI
====================
Single entry point for the characterization workflow:

    plan -> measure (externally) -> fit-power -> train-perf -> validate-perf -> optimize

plus `synth` subcommands that drive the synthetic bench.

Human-readable summaries go to stdout, diagnostics to stderr, artifacts to
files. Exit codes: 0 success, 1 usage error, 2 data or model error.

Usage:
    python -m energy_copilot.cli plan --sizes 1 2 3 4 5 --out plan.csv
    python -m energy_copilot.cli fit-power power.csv --out power_model.json
    python -m energy_copilot.cli train-perf runs.csv --out perf_model.json --holdout 0.1
    python -m energy_copilot.cli optimize power_model.json perf_model.json --input-size 3
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Literal

from dotenv import dotenv_values
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
)
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from energy_copilot.bench import synth_bench
from energy_copilot.config import settings
from energy_copilot.errors import (
    AllGridPointsFailed,
    DataFormatError,
    DegenerateData,
    EnergyCopilotError,
    Infeasible,
    InvalidInput,
    NoConvergence,
    NonMonotoneTimestamps,
    ParseError,
    RankDeficientDesign,
    SchemaMismatch,
    TooFewSamples,
    VersionMismatch,
)
from energy_copilot.models import perf_model, power_model
from energy_copilot.models.power_model import MachineSpec, PowerCoefficients
from energy_copilot.optimizer.energy_optimizer import Constraints, analyze_strategy, optimize
from energy_copilot.utils import data_io
from energy_copilot.utils.logging_setup import setup_logging

logger = logging.getLogger("energy-copilot")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

console = Console(soft_wrap=True)
err_console = Console(stderr=True, soft_wrap=True)


class UsageError(Exception):
    """Bad flags, config file or missing inputs."""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this CLI reserves 2 for data errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        err_console.print(f"{self.prog}: error: {escape(message)}", highlight=False)
        sys.exit(EXIT_USAGE)


# =============================================================================
# Run configuration
# =============================================================================

class RunConfig(BaseModel):
    """Settings defaults, overridden by the --config file, overridden by flags."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    freq_min_ghz: PositiveFloat
    freq_max_ghz: PositiveFloat
    freq_step_ghz: PositiveFloat
    cores_per_socket: PositiveInt
    num_sockets: PositiveInt
    seed: int
    svr_c: PositiveFloat
    svr_gamma: PositiveFloat
    svr_epsilon: NonNegativeFloat
    svr_tol: PositiveFloat
    svr_max_iter: PositiveInt
    kfold: PositiveInt
    train_fraction: float = Field(gt=0, lt=1)
    grid_jobs: int
    warmup_s: NonNegativeFloat
    synth_w0_ghz_s: PositiveFloat
    synth_samples_per_config: PositiveInt
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"]
    log_format: Literal["text", "json"]

    @field_validator("log_level", mode="before")
    @classmethod
    def _upper(cls, value: str) -> str:
        return value.upper() if isinstance(value, str) else value

    @field_validator("log_format", mode="before")
    @classmethod
    def _lower(cls, value: str) -> str:
        return value.lower() if isinstance(value, str) else value

    @classmethod
    def defaults(cls) -> dict:
        values = {name: getattr(settings, name) for name in cls.model_fields if name != "seed"}
        values["seed"] = settings.default_seed
        return values

    def machine(self) -> MachineSpec:
        return MachineSpec.from_range(
            self.freq_min_ghz,
            self.freq_max_ghz,
            self.freq_step_ghz,
            cores_per_socket=self.cores_per_socket,
            num_sockets=self.num_sockets,
        )

    def train_kwargs(self) -> dict:
        return {"tol": self.svr_tol, "max_iter": self.svr_max_iter}


def read_config_file(path: str | Path) -> dict:
    """Flat `key = value` file; keys must be RunConfig fields."""
    values = {key.strip().lower(): value for key, value in dotenv_values(path).items()}
    unknown = sorted(key for key in values if key not in RunConfig.model_fields)
    if unknown:
        raise UsageError(f"{path}: unknown config key(s) {unknown}; known keys: {sorted(RunConfig.model_fields)}")
    empty = sorted(key for key, value in values.items() if value is None or value == "")
    if empty:
        raise UsageError(f"{path}: config key(s) {empty} have no value")
    return values


def load_run_config(args: argparse.Namespace) -> RunConfig:
    values = RunConfig.defaults()
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    values.update({k: v for k, v in vars(args).items() if k in RunConfig.model_fields and v is not None})
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors())
        raise UsageError(f"invalid configuration: {problems}") from exc


# =============================================================================
# Error reporting
# =============================================================================

_SUGGESTIONS: list[tuple[type[BaseException], str]] = [
    (ParseError, "Fix the reported line: values must be finite numbers and timestamps must increase per configuration."),
    (SchemaMismatch, "Check the header against the documented column names and units."),
    (VersionMismatch, "Re-create the model file with this version of energy-copilot."),
    (RankDeficientDesign, "Measure more frequencies and core counts, spanning both socket counts."),
    (DegenerateData, "Benchmark runs must vary frequency, cores or input size."),
    (NoConvergence, "Raise svr_max_iter or svr_tol in the config file, lower --c, or use --grid-search."),
    (AllGridPointsFailed, "Every grid point failed; inspect the warnings above and the training data."),
    (Infeasible, "Relax the bound named above or widen the frequency and core limits."),
    (NonMonotoneTimestamps, "Power samples must be sorted by timestamp within each configuration."),
    (TooFewSamples, "Collect more samples; the operation's minimum is given in the message."),
    (DataFormatError, "Check the input file format."),
    (ValidationError, "A value is out of range for its field; see the message above."),
    (OSError, "Check that the path exists and is writable."),
]


def _get_error_suggestion(exc: BaseException) -> str:
    """Return a user-facing hint for a known error class."""
    for error_type, suggestion in _SUGGESTIONS:
        if isinstance(exc, error_type):
            return suggestion
    return "An unexpected error occurred. Re-run with --log-level DEBUG for details."


def _report(exc: BaseException) -> None:
    err_console.print(f"[bold red]error:[/bold red] {type(exc).__name__}: {escape(str(exc))}")
    err_console.print(f"[dim]hint: {escape(_get_error_suggestion(exc))}[/dim]")


# =============================================================================
# Argument types
# =============================================================================

def _existing_file(value: str) -> Path:
    path = Path(value)
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"input file not found: {value}")
    return path


def _fraction(value: str) -> float:
    try:
        number = float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {value}") from exc
    if not 0 < number < 1:
        raise argparse.ArgumentTypeError(f"must be strictly between 0 and 1, got {value}")
    return number


def _positive_float(value: str) -> float:
    try:
        number = float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {value}") from exc
    if not number > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return number


# =============================================================================
# Output helpers
# =============================================================================

def _coefficients_table(coeffs: PowerCoefficients, title: str) -> Table:
    table = Table(title=title)
    table.add_column("Term")
    table.add_column("Coefficient", justify="right")
    table.add_column("Unit")
    for name, value, unit in [
        ("c1", coeffs.c1, "W/GHz^3 per core"),
        ("c2", coeffs.c2, "W/GHz per core"),
        ("c3", coeffs.c3, "W"),
        ("c4", coeffs.c4, "W per socket"),
    ]:
        table.add_row(name, f"{value:.10g}", unit)
    return table


def _error_table(rows: list[tuple[str, float, float]], title: str) -> Table:
    table = Table(title=title)
    table.add_column("Evaluation")
    table.add_column("MAE (s)", justify="right")
    table.add_column("PAE (%)", justify="right")
    for label, mae, pae in rows:
        table.add_row(label, f"{mae:.4g}", f"{pae * 100:.2f}")
    return table


# =============================================================================
# Commands
# =============================================================================

def cmd_plan(args: argparse.Namespace, rc: RunConfig) -> int:
    machine = rc.machine()
    plan = data_io.plan_campaign(machine, args.sizes)
    data_io.write_plan_csv(plan, args.out)
    console.print(
        f"Campaign: {len(machine.freq_grid_ghz)} frequencies x {machine.max_cores} cores x "
        f"{len(args.sizes)} input sizes = [bold]{len(plan)}[/bold] runs -> {escape(str(args.out))}"
    )
    return EXIT_OK


def cmd_fit_power(args: argparse.Namespace, rc: RunConfig) -> int:
    machine = rc.machine()
    traces = data_io.read_power_csv(args.samples_csv, machine)
    observations = data_io.aggregate_traces(traces, rc.warmup_s)
    coeffs = power_model.fit_power(observations)
    report = power_model.fit_report(coeffs, observations)
    data_io.save_model(coeffs, args.out, fit=report)

    console.print(_coefficients_table(coeffs, f"Power model ({report.n_observations} configurations)"))
    console.print(f"PAE:  {report.pae * 100:.4f}%")
    console.print(f"RMSE: {report.rmse_w:.4f} W")
    if not report.plausible:
        console.print(f"[yellow]Physically implausible: {', '.join(report.implausible_terms)}[/yellow]")
    console.print(f"Saved -> {escape(str(args.out))}")
    return EXIT_OK


def cmd_train_perf(args: argparse.Namespace, rc: RunConfig) -> int:
    samples = data_io.read_perf_csv(args.runs_csv)
    test_part: list[perf_model.PerfSample] = []
    if args.holdout is not None:
        train_share = rc.train_fraction if args.holdout is True else 1.0 - args.holdout
        samples, test_part = perf_model.holdout_split(samples, train_share, rc.seed)
        console.print(f"Holdout split: {len(samples)} train / {len(test_part)} test runs")

    if args.grid_search:
        hp, cv = perf_model.grid_search(
            samples, folds=rc.kfold, seed=rc.seed, n_jobs=rc.grid_jobs, **rc.train_kwargs()
        )
        console.print(
            f"Grid search: C={hp.c_penalty:g}, gamma={hp.gamma:g}, epsilon={hp.epsilon_tube:g} "
            f"({cv.folds}-fold MAE {cv.mae_s:.4g} s, PAE {cv.pae * 100:.2f}%)"
        )
    else:
        hp = perf_model.SvrHyperparams(c_penalty=rc.svr_c, gamma=rc.svr_gamma, epsilon_tube=rc.svr_epsilon)

    model = perf_model.train(samples, hp, rc.seed, **rc.train_kwargs())
    data_io.save_model(model, args.out)
    console.print(
        f"Trained on {model.n_train} runs: {model.n_support} support vectors "
        f"(C={hp.c_penalty:g}, gamma={hp.gamma:g}, epsilon={hp.epsilon_tube:g})"
    )
    if test_part:
        mae, pae = perf_model.evaluate(model, test_part)
        console.print(_error_table([("holdout test", mae, pae)], "Performance model error"))
    console.print(f"Saved -> {escape(str(args.out))}")
    return EXIT_OK


def cmd_validate_perf(args: argparse.Namespace, rc: RunConfig) -> int:
    samples = data_io.read_perf_csv(args.runs_csv)
    model = data_io.load_perf_model(args.model)
    cv = perf_model.cross_validate(samples, model.hyperparams, rc.kfold, rc.seed, **rc.train_kwargs())
    mae, pae = perf_model.evaluate(model, samples)
    console.print(
        _error_table(
            [(f"{cv.folds}-fold cross-validation", cv.mae_s, cv.pae), ("saved model on these runs", mae, pae)],
            f"Performance model error ({len(samples)} runs)",
        )
    )
    return EXIT_OK


def _constraints(args: argparse.Namespace) -> Constraints:
    try:
        return Constraints(
            max_time_s=args.max_time,
            min_cores=args.min_cores,
            max_cores=args.max_cores,
            min_freq_ghz=args.min_freq,
            max_freq_ghz=args.max_freq,
        )
    except ValidationError as exc:
        raise UsageError(f"inconsistent constraint flags: {exc.errors()[0]['msg']}") from exc


def cmd_optimize(args: argparse.Namespace, rc: RunConfig) -> int:
    machine = rc.machine()
    constraints = _constraints(args)
    coeffs = data_io.load_power_model(args.power_model)
    model = data_io.load_perf_model(args.perf_model)

    best, surface = optimize(coeffs, model, machine, args.input_size, constraints)
    if args.surface:
        data_io.write_surface_csv(surface, args.surface)

    table = Table(title=f"Minimum-energy configuration for input size {args.input_size:g}")
    table.add_column("Frequency (GHz)", justify="right")
    table.add_column("Cores", justify="right")
    table.add_column("Sockets", justify="right")
    table.add_column("Power (W)", justify="right")
    table.add_column("Time (s)", justify="right")
    table.add_column("Energy (J)", justify="right")
    table.add_row(
        f"{best.config.freq_ghz:.1f}",
        str(best.config.cores),
        str(best.config.sockets),
        f"{best.power_w:.2f}",
        f"{best.time_s:.4f}",
        f"{best.energy_j:.2f}",
    )
    console.print(table)
    if best.time_clamped:
        console.print("[yellow]Predicted time was clamped to the floor; the model is extrapolating.[/yellow]")

    strategy = analyze_strategy(coeffs, machine)
    verdict = "race-to-idle expected" if strategy.race_to_idle_expected else "pace-to-idle may pay off"
    console.print(
        f"Strategy: dynamic+leakage+socket parcel at {escape(strategy.max_config.label())} = "
        f"{strategy.dynamic_plus_leak_max_w:.5f} W vs static {strategy.static_w:.5f} W -> {verdict}"
    )
    if args.surface:
        console.print(f"Surface ({len(surface)} configurations) -> {escape(str(args.surface))}")
    return EXIT_OK


# --- synth ---

def _app(args: argparse.Namespace, rc: RunConfig) -> synth_bench.SyntheticApp:
    return synth_bench.SyntheticApp(parallel_fraction=args.phi, w0_ghz_s=rc.synth_w0_ghz_s)


def _truth(args: argparse.Namespace) -> PowerCoefficients:
    return PowerCoefficients(c1=args.c1, c2=args.c2, c3=args.c3, c4=args.c4)


def cmd_synth_gen_power(args: argparse.Namespace, rc: RunConfig) -> int:
    noise = synth_bench.NoiseSpec(power_sigma_w=args.sigma, seed=rc.seed)
    traces = synth_bench.generate_power_traces(_truth(args), rc.machine(), noise, rc.synth_samples_per_config)
    data_io.write_power_csv(traces, args.out)
    console.print(
        f"Synthetic power: {len(traces)} configurations x {rc.synth_samples_per_config} samples "
        f"(sigma {args.sigma:g} W, seed {rc.seed}) -> {escape(str(args.out))}"
    )
    return EXIT_OK


def cmd_synth_gen_perf(args: argparse.Namespace, rc: RunConfig) -> int:
    noise = synth_bench.NoiseSpec(time_sigma_rel=args.time_noise, seed=rc.seed)
    samples = synth_bench.generate_perf_dataset(_app(args, rc), rc.machine(), args.sizes, noise)
    data_io.write_perf_csv(samples, args.out)
    console.print(
        f"Synthetic runs: {len(samples)} (phi {args.phi:g}, relative noise {args.time_noise:g}, "
        f"seed {rc.seed}) -> {escape(str(args.out))}"
    )
    return EXIT_OK


def cmd_synth_compare(args: argparse.Namespace, rc: RunConfig) -> int:
    if (args.power_model is None) != (args.perf_model is None):
        raise UsageError("--power-model and --perf-model must be given together")

    machine = rc.machine()
    app = _app(args, rc)
    truth = _truth(args)
    if args.power_model is not None:
        coeffs = data_io.load_power_model(args.power_model)
        model = data_io.load_perf_model(args.perf_model)
    else:
        console.print("No model files given: training on noiseless synthetic data")
        coeffs = power_model.fit_power(synth_bench.generate_power_dataset(truth, machine))
        hp = perf_model.SvrHyperparams(c_penalty=rc.svr_c, gamma=rc.svr_gamma, epsilon_tube=rc.svr_epsilon)
        samples = synth_bench.generate_perf_dataset(app, machine, args.sizes)
        model = perf_model.train(samples, hp, rc.seed, **rc.train_kwargs())

    cores = args.cores or synth_bench.default_core_list(machine.max_cores)
    result = synth_bench.governor_proxy_table(truth, app, machine, args.sizes, cores, coeffs, model)

    table = Table(title=f"Optimizer vs f_max governor proxy (phi {args.phi:g})")
    table.add_column("Input size", justify="right")
    table.add_column("Optimizer pick")
    table.add_column("Optimizer (J)", justify="right")
    table.add_column("Proxy best (J)", justify="right")
    table.add_column("Proxy worst (J)", justify="right")
    table.add_column("Min save (%)", justify="right")
    table.add_column("Max save (%)", justify="right")
    for row in result.rows:
        table.add_row(
            f"{row.input_size:g}",
            f"{row.optimizer_config.freq_ghz:.1f} GHz x {row.optimizer_config.cores}",
            f"{row.optimizer_j:.1f}",
            f"{row.proxy_best.energy_j:.1f} ({row.proxy_best.cores})",
            f"{row.proxy_worst.energy_j:.1f} ({row.proxy_worst.cores})",
            f"{row.min_save_pct:.1f}",
            f"{row.max_save_pct:.1f}",
        )
    console.print(table)
    console.print(
        f"Average savings: {result.mean_min_save_pct:.1f}% vs proxy best, "
        f"{result.mean_max_save_pct:.1f}% vs proxy worst"
    )
    console.print(f"[dim]{escape(synth_bench.PROXY_LIMITATION)}[/dim]")
    if args.out:
        synth_bench.write_comparison_csv(result, args.out)
        console.print(f"Comparison -> {escape(str(args.out))}")
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================

def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    group = common.add_argument_group("global options")
    group.add_argument("--config", type=_existing_file, help="flat key = value file; flags override it")
    group.add_argument("--log-level", dest="log_level", type=str.upper, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    group.add_argument("--log-format", dest="log_format", choices=["text", "json"])
    group.add_argument("--freq-min", dest="freq_min_ghz", type=_positive_float, help="lowest frequency (GHz)")
    group.add_argument("--freq-max", dest="freq_max_ghz", type=_positive_float, help="highest frequency (GHz)")
    group.add_argument("--freq-step", dest="freq_step_ghz", type=_positive_float, help="frequency step (GHz)")
    group.add_argument("--cores-per-socket", dest="cores_per_socket", type=int)
    group.add_argument("--sockets", dest="num_sockets", type=int)
    return common


def _add_truth_options(parser: argparse.ArgumentParser) -> None:
    truth = power_model.REFERENCE_COEFFICIENTS
    parser.add_argument("--c1", type=float, default=truth.c1, help="ground-truth c1 (W/GHz^3)")
    parser.add_argument("--c2", type=float, default=truth.c2, help="ground-truth c2 (W/GHz)")
    parser.add_argument("--c3", type=float, default=truth.c3, help="ground-truth c3 (W)")
    parser.add_argument("--c4", type=float, default=truth.c4, help="ground-truth c4 (W per socket)")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="energy-copilot", description="Energy-optimal frequency and core-count selection")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = commands.add_parser("plan", parents=[common], help="emit the characterization campaign")
    p.add_argument("--sizes", type=float, nargs="+", required=True, help="input sizes to benchmark")
    p.add_argument("--out", type=Path, required=True, help="plan CSV to write")
    p.set_defaults(handler=cmd_plan)

    p = commands.add_parser("fit-power", parents=[common], help="fit the power model from sampled power")
    p.add_argument("samples_csv", type=_existing_file)
    p.add_argument("--out", type=Path, required=True, help="power model JSON to write")
    p.add_argument("--warmup", dest="warmup_s", type=float, help="seconds dropped from each trace")
    p.set_defaults(handler=cmd_fit_power)

    p = commands.add_parser("train-perf", parents=[common], help="train the SVR performance model")
    p.add_argument("runs_csv", type=_existing_file)
    p.add_argument("--out", type=Path, required=True, help="performance model JSON to write")
    p.add_argument("--grid-search", action="store_true", help="select C, gamma and epsilon by k-fold CV")
    p.add_argument("--c", dest="svr_c", type=_positive_float, help="penalty C")
    p.add_argument("--gamma", dest="svr_gamma", type=_positive_float, help="RBF width")
    p.add_argument("--epsilon", dest="svr_epsilon", type=float, help="tube half-width (standardized units)")
    p.add_argument("--seed", type=int)
    p.add_argument("--kfold", type=int, help="folds for --grid-search")
    p.add_argument("--jobs", dest="grid_jobs", type=int, help="concurrent grid points")
    p.add_argument(
        "--holdout",
        type=_fraction,
        nargs="?",
        const=True,
        help="share of runs held out for testing, e.g. 0.1 (no value: 1 - train_fraction)",
    )
    p.set_defaults(handler=cmd_train_perf)

    p = commands.add_parser("validate-perf", parents=[common], help="k-fold CV and error of a saved model")
    p.add_argument("runs_csv", type=_existing_file)
    p.add_argument("model", type=_existing_file)
    p.add_argument("--kfold", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_validate_perf)

    p = commands.add_parser("optimize", parents=[common], help="minimum-energy configuration")
    p.add_argument("power_model", type=_existing_file)
    p.add_argument("perf_model", type=_existing_file)
    p.add_argument("--input-size", type=float, required=True)
    p.add_argument("--max-time", type=_positive_float, help="deadline in seconds")
    p.add_argument("--min-cores", type=int)
    p.add_argument("--max-cores", type=int)
    p.add_argument("--min-freq", type=_positive_float, help="GHz")
    p.add_argument("--max-freq", type=_positive_float, help="GHz")
    p.add_argument("--surface", type=Path, help="write the admissible energy surface CSV")
    p.set_defaults(handler=cmd_optimize)

    synth = commands.add_parser("synth", help="synthetic bench")
    synth_commands = synth.add_subparsers(dest="synth_command", required=True, parser_class=_Parser)

    s = synth_commands.add_parser("gen-power", parents=[common], help="synthetic power sample log")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--sigma", type=float, default=0.0, help="Gaussian power noise (W)")
    s.add_argument("--seed", type=int)
    s.add_argument("--samples-per-config", dest="synth_samples_per_config", type=int)
    _add_truth_options(s)
    s.set_defaults(handler=cmd_synth_gen_power)

    s = synth_commands.add_parser("gen-perf", parents=[common], help="synthetic benchmark runs")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--phi", type=float, required=True, help="parallel fraction in [0, 1]")
    s.add_argument("--sizes", type=float, nargs="+", required=True)
    s.add_argument("--time-noise", type=float, default=0.0, help="relative Gaussian time noise")
    s.add_argument("--seed", type=int)
    s.add_argument("--w0", dest="synth_w0_ghz_s", type=_positive_float, help="work per input-size unit (GHz*s)")
    s.set_defaults(handler=cmd_synth_gen_perf)

    s = synth_commands.add_parser("compare", parents=[common], help="optimizer vs f_max governor proxy")
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--sizes", type=float, nargs="+", default=[1.0, 2.0, 3.0, 4.0, 5.0])
    s.add_argument("--cores", type=int, nargs="+", help="proxy core counts (default 1, 2, 4, ..., max)")
    s.add_argument("--power-model", type=_existing_file)
    s.add_argument("--perf-model", type=_existing_file)
    s.add_argument("--out", type=Path, help="comparison CSV to write")
    s.add_argument("--seed", type=int)
    s.add_argument("--w0", dest="synth_w0_ghz_s", type=_positive_float)
    s.add_argument("--c", dest="svr_c", type=_positive_float)
    s.add_argument("--gamma", dest="svr_gamma", type=_positive_float)
    s.add_argument("--epsilon", dest="svr_epsilon", type=float)
    _add_truth_options(s)
    s.set_defaults(handler=cmd_synth_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = load_run_config(args)
        setup_logging(rc.log_level, rc.log_format)
        try:
            rc.machine()
        except (InvalidInput, ValidationError) as exc:
            raise UsageError(f"invalid machine: {exc}") from exc
        return args.handler(args, rc)
    except UsageError as exc:
        err_console.print(f"[bold red]usage error:[/bold red] {escape(str(exc))}")
        return EXIT_USAGE
    except (EnergyCopilotError, ValidationError, OSError) as exc:
        logger.debug("Command failed", exc_info=True)
        _report(exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
