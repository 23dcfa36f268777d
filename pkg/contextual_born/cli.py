"""Command-line surface.

Every subcommand builds a `RunConfig`, runs one engine operation and writes a
JSON report (or a CSV table for the scan commands). Exit codes: 0 when the
run satisfies its contract, 1 on an engine error or a contract violation,
2 on invalid input.
"""
import logging
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import click
import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .config import Tolerances
from .contextual import CvParams, assignment
from .errors import ContractViolation, DimensionMismatch, EngineError
from .hilbert import Operator, StateVector, haar_random_context, random_hermitian, random_state
from .invariance import BORN_SPREAD_BOUND, ScanReport, invariance_scan, quantum_expectation
from .measure import BORN, QUARTIC, ContextStatistics, MeasureSpec, MeasureValidity, evaluate_measure, \
    parametrized_spec, statistics
from .scenarios import heisenberg_trajectory, zurek_demo
from .schemas import (
    Command,
    ComplexValue,
    ErrorResponse,
    MeasureKind,
    ObservableFile,
    OutputFormat,
    Report,
    ReportMeta,
    RunConfig,
    ValidationErrorResponse,
)
from .solver import SolverOptions, solve_uniqueness

logger = logging.getLogger("contextual_born")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
ZUREK_BOUND = 1e-12
DISTANCE_BOUND = 1e-4


class WeakValueReport(BaseModel):
    context_label: str
    retained: Tuple[int, ...]
    excluded: Dict[int, str]
    values: Tuple[ComplexValue, ...]
    weights: Tuple[ComplexValue, ...]
    validity: MeasureValidity
    statistics: ContextStatistics
    quantum_reference: ComplexValue
    reference_deviation: float


class Outcome(NamedTuple):
    results: BaseModel
    table: Optional[pd.DataFrame]
    violations: List[str]


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_time=False, show_path=False)],
        force=True,
    )


def _streams(seed: int) -> Tuple[np.random.Generator, ...]:
    """Independent generators for the pre-state, the observable and the Hamiltonian."""
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))


def load_observable(path: str, dim: int, tol: Tolerances) -> Operator:
    parsed = ObservableFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
    if parsed.dim != dim:
        raise DimensionMismatch(f"Observable file is {parsed.dim}-dimensional, --dim is {dim}",
                                {"file": parsed.dim, "dim": dim})
    return Operator(np.array(parsed.entries, dtype=np.complex128), tol=tol).require_hermitian("observable")


def _inputs(config: RunConfig, tol: Tolerances) -> Tuple[StateVector, Operator, np.random.Generator]:
    psi_rng, obs_rng, ham_rng = _streams(config.seed)
    psi = random_state(config.dim, psi_rng, tol=tol)
    if config.observable_file:
        A = load_observable(config.observable_file, config.dim, tol)
    else:
        A = random_hermitian(config.dim, obs_rng, tol=tol)
    return psi, A, ham_rng


def _measure_spec(config: RunConfig, psi: StateVector) -> MeasureSpec:
    if config.measure is MeasureKind.BORN:
        return BORN
    if config.measure is MeasureKind.QUARTIC:
        return QUARTIC
    mu = config.mu if config.mu is not None else (1.0,) + (0.0,) * (config.dim - 1)
    return parametrized_spec(psi, mu, config.p0)


def _born_contract(config: RunConfig, p: CvParams) -> bool:
    return config.measure is MeasureKind.BORN and p.is_weak


def handle_weak_value(config: RunConfig, tol: Tolerances) -> Outcome:
    psi, A, _ = _inputs(config, tol)
    spec = _measure_spec(config, psi)
    p = CvParams(b=config.b)
    context = haar_random_context(config.dim, config.seed, tol=tol)

    values = assignment(A, psi, context, p, tol)
    measure = evaluate_measure(spec, psi, context, tol, values.retained)
    stats = statistics(A, psi, context, spec, p, tol, retained=values.retained)
    reference = quantum_expectation(A, psi)
    deviation = abs(stats.expectation - reference)
    report = WeakValueReport(
        context_label=context.label,
        retained=values.retained,
        excluded=values.excluded,
        values=values.values,
        weights=measure.weights,
        validity=measure.validity,
        statistics=stats,
        quantum_reference=reference,
        reference_deviation=deviation,
    )
    violations = []
    if _born_contract(config, p) and deviation >= BORN_SPREAD_BOUND:
        violations.append(f"|Ex - <psi|A|psi>| = {deviation:.3e} under the Born measure")
    return Outcome(report, None, violations)


def handle_invariance_scan(config: RunConfig, tol: Tolerances) -> Outcome:
    psi, A, _ = _inputs(config, tol)
    spec = _measure_spec(config, psi)
    p = CvParams(b=config.b)
    report: ScanReport = invariance_scan(A, psi, spec, p, config.n_contexts, config.seed, tol=tol)

    ex = np.asarray(report.ex_values)
    table = pd.DataFrame({
        "context_index": np.arange(report.n_contexts),
        "context_seed": list(report.context_seeds),
        "ex_re": ex.real,
        "ex_im": ex.imag,
        "var": np.asarray(report.var_values),
        "var_imag": np.asarray(report.var_imag_values),
    })
    violations = []
    if _born_contract(config, p) and not report.born_contract_holds():
        violations.append(
            f"Born scan not context-invariant: ex_spread={report.ex_spread:.3e}, "
            f"var_spread={report.var_spread:.3e}, reference_deviation={report.reference_deviation:.3e}"
        )
    return Outcome(report, table, violations)


def handle_uniqueness_solve(config: RunConfig, tol: Tolerances) -> Outcome:
    opts = SolverOptions(
        max_iter=config.max_iter,
        tol=config.tol,
        n_contexts=config.n_contexts,
        n_observables=config.n_observables,
    )
    result = solve_uniqueness(config.dim, config.seed, opts, tol)
    violations = []
    if not result.converged:
        violations.append(f"solver stopped at residual {result.final_residual:.3e} above {config.tol:g}")
    elif result.distance_to_born >= DISTANCE_BOUND:
        violations.append(f"solver converged {result.distance_to_born:.3e} away from the Born point")
    return Outcome(result, None, violations)


def handle_zurek_demo(config: RunConfig, tol: Tolerances) -> Outcome:
    report = zurek_demo(tol)
    violations = []
    if report.swap_symmetry_residual >= ZUREK_BOUND:
        violations.append(f"|Ex(A x 1)| = {report.swap_symmetry_residual:.3e}")
    return Outcome(report, None, violations)


def handle_heisenberg_scan(config: RunConfig, tol: Tolerances) -> Outcome:
    psi, A, ham_rng = _inputs(config, tol)
    H = random_hermitian(config.dim, ham_rng, tol=tol)
    trajectory = heisenberg_trajectory(H, A, psi, config.time, config.steps, config.eigen_index, tol)
    values = np.asarray(trajectory.values)
    table = pd.DataFrame({"time": trajectory.times, "value_re": values.real, "value_im": values.imag})
    violations = []
    if trajectory.endpoint_residual >= BORN_SPREAD_BOUND:
        violations.append(f"endpoint weak value misses the eigenvalue by {trajectory.endpoint_residual:.3e}")
    return Outcome(trajectory, table, violations)


HANDLERS: Dict[Command, Callable[[RunConfig, Tolerances], Outcome]] = {
    Command.WEAK_VALUE: handle_weak_value,
    Command.INVARIANCE_SCAN: handle_invariance_scan,
    Command.UNIQUENESS_SOLVE: handle_uniqueness_solve,
    Command.ZUREK_DEMO: handle_zurek_demo,
    Command.HEISENBERG_SCAN: handle_heisenberg_scan,
}


def write_report(config: RunConfig, tol: Tolerances, outcome: Outcome) -> None:
    with click.open_file(config.out_path, "w", encoding="utf-8") as fh:
        if config.output is OutputFormat.CSV:
            outcome.table.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")
            return
        report = Report(
            meta=ReportMeta(version=__version__, command=config.command, seed=config.seed,
                            tolerances=tol.model_dump()),
            inputs=config,
            results=outcome.results.model_dump(mode="json"),
        )
        fh.write(report.model_dump_json(indent=2))
        fh.write("\n")


def _emit(response: BaseModel) -> None:
    click.echo(response.model_dump_json(), err=True)


def validation_error_response(exc: ValidationError) -> ValidationErrorResponse:
    errors = {}
    for error in exc.errors():
        field_name = ".".join(str(loc) for loc in error["loc"]) if error["loc"] else "config"
        errors[field_name] = error["msg"]
    return ValidationErrorResponse(errors=errors, code="VALIDATION_ERROR")


def run(config: RunConfig) -> int:
    tol = Tolerances(overlap_cutoff=config.tolerance_overlap, orthonormal=config.tolerance_orthonormal)
    logger.debug("Running %s (dim=%d, seed=%d)", config.command.value, config.dim, config.seed)
    try:
        outcome = HANDLERS[config.command](config, tol)
    except ValidationError as exc:
        _emit(validation_error_response(exc))
        return EXIT_USAGE
    except EngineError as exc:
        logger.error("%s: %s", exc.code, exc.message)
        _emit(ErrorResponse(error=exc.message, code=exc.code, details=exc.details))
        return EXIT_FAILED

    write_report(config, tol, outcome)
    if outcome.violations:
        for violation in outcome.violations:
            logger.error("Contract violated: %s", violation)
        _emit(ErrorResponse(error="; ".join(outcome.violations), code=ContractViolation.code))
        return EXIT_FAILED
    return EXIT_OK


def _dispatch(command: Command, **options) -> None:
    ctx = click.get_current_context()
    try:
        config = RunConfig(command=command, **options)
    except ValidationError as exc:
        _emit(validation_error_response(exc))
        ctx.exit(EXIT_USAGE)
    ctx.exit(run(config))


class ComplexParamType(click.ParamType):
    name = "complex"

    def convert(self, value, param, ctx):
        if isinstance(value, complex):
            return value
        try:
            return complex(str(value).replace(" ", ""))
        except ValueError:
            self.fail(f"{value!r} is not a complex number such as 0.3 or 0.1+0.2j", param, ctx)


class FloatListParamType(click.ParamType):
    name = "floats"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            return tuple(float(x) for x in str(value).split(","))
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of numbers", param, ctx)


COMPLEX = ComplexParamType()
FLOAT_LIST = FloatListParamType()


def _apply(options):
    def decorator(f):
        for option in reversed(options):
            f = option(f)
        return f
    return decorator


output_options = _apply([
    click.option("--output", type=click.Choice([o.value for o in OutputFormat]), default="json",
                 show_default=True, help="Report format; csv only for invariance-scan and heisenberg-scan."),
    click.option("--out", "out_path", default="-", show_default=True, help="Output file, '-' for stdout."),
    click.option("--tolerance-overlap", type=float, default=1e-12, show_default=True,
                 help="|<w|psi>| at or below this excludes w from the sample space."),
    click.option("--tolerance-orthonormal", type=float, default=1e-10, show_default=True,
                 help="Largest accepted Gram-matrix residual for a context."),
])

state_options = _apply([
    click.option("--dim", type=int, default=3, show_default=True, help="Hilbert-space dimension."),
    click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True, help="Master seed."),
    click.option("--observable-file", type=click.Path(exists=True, dir_okay=False),
                 help="JSON observable {dim, entries}; drawn at random when omitted."),
])

measure_options = _apply([
    click.option("--measure", type=click.Choice([m.value for m in MeasureKind]), default="born",
                 show_default=True),
    click.option("--mu", type=FLOAT_LIST, help="Parametrized coefficients mu_0,...,mu_{N-1}."),
    click.option("--p0", type=float, default=0.0, show_default=True, help="Parametrized offset."),
    click.option("--b", type=COMPLEX, default="0", show_default=True,
                 help="Contextual-value coefficient b; a is fixed to 1."),
])


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="contextual_born")
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level on stderr.")
def main(verbose: bool) -> None:
    """Contextual values, candidate measures and the recovery of Born's rule."""
    configure_logging(verbose)


@main.command("weak-value")
@state_options
@measure_options
@output_options
def weak_value_command(**options):
    """Contextual values, weights and Ex/Var in one Haar context."""
    _dispatch(Command.WEAK_VALUE, **options)


@main.command("invariance-scan")
@state_options
@measure_options
@click.option("--n-contexts", type=int, default=None, show_default="100")
@output_options
def invariance_scan_command(**options):
    """Ex/Var across Haar-random contexts and their spread."""
    _dispatch(Command.INVARIANCE_SCAN, **options)


@main.command("uniqueness-solve")
@click.option("--dim", type=int, default=3, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--n-contexts", type=int, default=None, show_default="10")
@click.option("--max-iter", type=int, default=20000, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True, help="Residual threshold for convergence.")
@click.option("--n-observables", type=int, default=5, show_default=True)
@output_options
def uniqueness_solve_command(**options):
    """Minimize the invariance residual over (b, mu, P0) and report the distance to Born."""
    _dispatch(Command.UNIQUENESS_SOLVE, **options)


@main.command("zurek-demo")
@output_options
def zurek_demo_command(**options):
    """Weak values and probabilities for the symmetric system-environment state."""
    _dispatch(Command.ZUREK_DEMO, dim=4, **options)


@main.command("heisenberg-scan")
@state_options
@click.option("--time", type=float, default=1.0, show_default=True, help="Final time T.")
@click.option("--steps", type=int, default=16, show_default=True)
@click.option("--eigen-index", type=int, default=0, show_default=True,
              help="Eigenvector of A(T), eigenvalues ascending.")
@output_options
def heisenberg_scan_command(**options):
    """Weak value of A(t) along [0, T], post-selected on an eigenstate of A(T)."""
    _dispatch(Command.HEISENBERG_SCAN, **options)
