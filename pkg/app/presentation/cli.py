"""
Command-line interface: analyze, simulate, check and corpus.

Exit codes: 0 certified, 1 certified with unknown loops (or unknown
invariant verdicts), 2 failed (or refuted invariants), 3 parse or input error.
"""

import json
import logging
import sys
from typing import Dict, List, Optional, Tuple

import click
from pydantic import ValidationError

from app.core.analysis_service import AnalysisService
from app.core.exceptions import AnalyzerError, ProgramSyntaxError
from app.core.models import (
    SCHEMA_VERSION, AnalysisReport, CheckReport, CorpusReport, OutputFormat, ReportStatus, RunConfig,
    SimulationStatistics, StrategyKind, Verdict,
)

logger = logging.getLogger(__name__)

EXIT_CERTIFIED = 0
EXIT_UNKNOWN_LOOPS = 1
EXIT_FAILED = 2
EXIT_INPUT_ERROR = 3

STATUS_EXIT_CODES = {
    ReportStatus.CERTIFIED: EXIT_CERTIFIED,
    ReportStatus.CERTIFIED_WITH_UNKNOWN_LOOPS: EXIT_UNKNOWN_LOOPS,
    ReportStatus.FAILED: EXIT_FAILED,
}

ROW_MARKS = {True: "ok", False: "VIOLATED", None: "unchecked"}


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )


def parse_bindings(bindings: Tuple[str, ...]) -> Dict[str, int]:
    """Parse ``name=integer`` pairs."""
    store: Dict[str, int] = {}
    for binding in bindings:
        name, separator, value = binding.partition("=")
        name = name.strip()
        if not separator or not name.isidentifier():
            raise ValueError(f"invalid binding {binding!r}, expected name=integer")
        try:
            store[name] = int(value.strip())
        except ValueError:
            raise ValueError(f"invalid binding {binding!r}, expected name=integer") from None
    return store


def _load_config(as_json: bool, **overrides) -> RunConfig:
    """Environment configuration; the --json flag overrides PWHILE_OUTPUT_FORMAT."""
    return RunConfig.from_env(output_format=OutputFormat.JSON if as_json else None, **overrides)


def _fail_input(error: Exception, as_json: bool) -> None:
    if as_json:
        details = {"type": type(error).__name__, "message": str(error)}
        if isinstance(error, ProgramSyntaxError):
            details.update({"line": error.line, "column": error.column})
        click.echo(json.dumps({"schema_version": SCHEMA_VERSION, "error": details}, indent=2))
    else:
        click.echo(f"error: {error}", err=True)
    sys.exit(EXIT_INPUT_ERROR)


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------

def _table(header: List[str], rows: List[List[str]]) -> List[str]:
    widths = [max(len(str(cell)) for cell in column) for column in zip(header, *rows)]
    return ["  ".join(str(cell).ljust(width) for cell, width in zip(line, widths)).rstrip()
            for line in [header] + rows]


def render_report(report: AnalysisReport) -> str:
    lines = [f"program: {report.program}", f"status: {report.status.value}"]
    if report.bound is not None:
        lines.append(f"bound: {report.bound}")
    if report.loops:
        lines.append("")
        lines.append("loops:")
        for loop in report.loops:
            state = "verified" if loop.verified else ("unverified" if loop.certified else "uncertified")
            lines.append(f"  {loop.id} [{loop.mode.value}, {loop.strategy}] post {loop.post}: {loop.bound} ({state})")
            if loop.norms:
                lines.append(f"    norms: {', '.join(loop.norms)}")
            if loop.body_cost is not None:
                lines.append(f"    body cost: {loop.body_cost}")
            for constraint in loop.constraints:
                lines.append(f"    {constraint}")
            if loop.coefficients:
                lines.append("    solution: " + ", ".join(f"{k} = {v}" for k, v in loop.coefficients.items()))
            for note in loop.notes:
                lines.append(f"    note: {note}")
    if report.cross_check:
        lines.append("")
        lines.append("cross-check:")
        rows = [[str(row.store), row.oracle_lower or "-", row.bound_value, row.live_mass or "-",
                 ROW_MARKS[row.ok]] for row in report.cross_check]
        lines += ["  " + line for line in _table(["store", "oracle", "bound", "live", ""], rows)]
    for diagnostic in report.diagnostics:
        lines.append(f"diagnostic: {diagnostic}")
    return "\n".join(lines)


def render_statistics(statistics: SimulationStatistics) -> str:
    lines = [
        f"program: {statistics.program}",
        f"store: {statistics.store}",
        f"samples: {statistics.samples} (seed {statistics.seed})",
        f"mean cost: {statistics.mean_cost} (~{statistics.mean_cost_decimal:.6f})",
        f"abort rate: {statistics.abort_rate}",
        f"timeout rate: {statistics.timeout_rate}",
    ]
    if statistics.oracle_lower is not None:
        lines.append(f"oracle: {statistics.oracle_lower} (live mass {statistics.oracle_live_mass})")
    else:
        lines.append(f"oracle: unavailable ({statistics.oracle_note})")
    return "\n".join(lines)


def render_check(report: CheckReport) -> str:
    lines = [f"program: {report.program}"]
    for check in report.checks:
        line = f"{check.loop}: {check.verdict.value}"
        if check.invariant:
            line += f" ({check.invariant})"
        if check.witness is not None:
            line += f" witness {check.witness}"
        lines.append(line)
        if check.detail and check.verdict != Verdict.CERTIFIED:
            lines.append(f"  {check.detail}")
    if not report.checks:
        lines.append("no loops")
    return "\n".join(lines)


def render_corpus(report: CorpusReport) -> str:
    rows = [[r.program, r.status.value, r.bound or "-"] for r in report.reports]
    return "\n".join(_table(["program", "status", "bound"], rows))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Expected-cost analysis for probabilistic while programs."""


@main.command()
@click.argument("path", type=click.Path())
@click.option("--degree", type=int, default=None, help="Template degree cap (1 or 2).")
@click.option("--strategy", type=click.Choice([kind.value for kind in StrategyKind]), default=None,
              help="Use a single loop strategy.")
@click.option("--horizon", type=int, default=None, help="Oracle horizon in steps.")
@click.option("--seed", type=int, default=None, help="Random seed.")
@click.option("--json", "as_json", is_flag=True, default=False, help="Print the JSON report.")
@click.option("--verbose", is_flag=True, default=False, help="Debug logging on stderr.")
def analyze(path: str, degree: Optional[int], strategy: Optional[str], horizon: Optional[int],
            seed: Optional[int], as_json: bool, verbose: bool):
    """Infer an expected-cost bound for PATH and cross-check it."""
    configure_logging(verbose)
    try:
        config = _load_config(
            as_json, max_degree=degree, horizon=horizon, seed=seed,
            strategy_order=[StrategyKind(strategy)] if strategy else None,
        )
        as_json = config.output_format == OutputFormat.JSON
        report = AnalysisService(config).analyze_file(path)
    except (ValidationError, OSError, ValueError, AnalyzerError) as e:
        _fail_input(e, as_json)
    click.echo(report.model_dump_json(indent=2) if as_json else render_report(report))
    sys.exit(STATUS_EXIT_CODES[report.status])


@main.command()
@click.argument("path", type=click.Path())
@click.option("--set", "bindings", multiple=True, help="Initial binding name=integer (repeatable).")
@click.option("--samples", type=int, default=1000, show_default=True, help="Number of runs.")
@click.option("--seed", type=int, default=None, help="Random seed.")
@click.option("--horizon", type=int, default=None, help="Oracle horizon in steps.")
@click.option("--trace", "trace_steps", type=int, default=0, help="Print the first N multidistribution steps.")
@click.option("--json", "as_json", is_flag=True, default=False, help="Print JSON statistics.")
@click.option("--verbose", is_flag=True, default=False, help="Debug logging on stderr.")
def simulate(path: str, bindings: Tuple[str, ...], samples: int, seed: Optional[int], horizon: Optional[int],
             trace_steps: int, as_json: bool, verbose: bool):
    """Sample runs of PATH and compare with the exhaustive oracle."""
    configure_logging(verbose)
    try:
        store = parse_bindings(bindings)
        config = _load_config(as_json, horizon=horizon, seed=seed)
        as_json = config.output_format == OutputFormat.JSON
        service = AnalysisService(config)
        statistics = service.simulate_file(path, store, samples=samples, seed=seed, horizon=horizon)
        trace = None
        if trace_steps > 0:
            trace = service.trace_source(service.file_handler.read_file_content(path), store, trace_steps, seed)
    except (ValidationError, OSError, ValueError, AnalyzerError) as e:
        _fail_input(e, as_json)
    if as_json:
        click.echo(statistics.model_dump_json(indent=2))
    else:
        click.echo(render_statistics(statistics))
        if trace is not None:
            click.echo("trace:")
            click.echo(trace)
    sys.exit(EXIT_CERTIFIED)


@main.command()
@click.argument("path", type=click.Path())
@click.option("--invariants", "invariants_path", type=click.Path(), required=True,
              help="File of 'label: expression' lines.")
@click.option("--json", "as_json", is_flag=True, default=False, help="Print the JSON report.")
@click.option("--verbose", is_flag=True, default=False, help="Debug logging on stderr.")
def check(path: str, invariants_path: str, as_json: bool, verbose: bool):
    """Check candidate upper invariants for the loops of PATH."""
    configure_logging(verbose)
    try:
        config = _load_config(as_json)
        as_json = config.output_format == OutputFormat.JSON
        report = AnalysisService(config).check_file(path, invariants_path)
    except (ValidationError, OSError, ValueError, AnalyzerError) as e:
        _fail_input(e, as_json)
    click.echo(report.model_dump_json(indent=2) if as_json else render_check(report))
    if report.all_certified:
        sys.exit(EXIT_CERTIFIED)
    if any(c.verdict == Verdict.REFUTED for c in report.checks):
        sys.exit(EXIT_FAILED)
    sys.exit(EXIT_UNKNOWN_LOOPS)


@main.command()
@click.argument("directory", type=click.Path(), required=False)
@click.option("--json", "as_json", is_flag=True, default=False, help="Print the JSON report.")
@click.option("--verbose", is_flag=True, default=False, help="Debug logging on stderr.")
def corpus(directory: Optional[str], as_json: bool, verbose: bool):
    """Analyse every program of DIRECTORY (the bundled corpus by default)."""
    configure_logging(verbose)
    try:
        config = _load_config(as_json)
        as_json = config.output_format == OutputFormat.JSON
        report = AnalysisService(config).run_corpus(directory)
    except (ValidationError, OSError, ValueError) as e:
        _fail_input(e, as_json)
    click.echo(report.model_dump_json(indent=2) if as_json else render_corpus(report))
    worst = max((STATUS_EXIT_CODES[r.status] for r in report.reports), default=EXIT_CERTIFIED)
    sys.exit(worst)


if __name__ == "__main__":
    main()
