"""
Core service layer: parse, analyse, cross-check and report.
"""

import itertools
import logging
import os
import random
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from fastapi import UploadFile

from app.core.analysis import (
    LoopAnalyzer, LoopBoundDerivation, ReplayResult, check_upper_invariant, loop_label, replay_derivation,
)
from app.core.exceptions import (
    AnalyzerError, InvariantFileError, LoopAnalysisError, StateSpaceLimitError,
)
from app.core.models import (
    AnalysisReport, CheckReport, CorpusReport, CostMode, CrossCheckRow, DerivationSummary, InvariantCheck,
    ReportStatus, RunConfig, SimulationStatistics, Verdict,
)
from app.core.semantics import Scheduler, expected_cost_oracle, format_trace, sample_run, trace_run
from app.core.syntax import (
    ZERO, Command, CostExpr, Store, eval_cost, format_rational, free_vars, print_cost, while_loops,
)
from app.core.transformer import et_symbolic
from app.infrastructure.corpus_repository import ProgramCorpusRepository
from app.infrastructure.file_handler import ProgramFileHandler
from app.infrastructure.program_parser import ProgramParser

logger = logging.getLogger(__name__)


def summarize_derivation(derivation: LoopBoundDerivation, replay: ReplayResult) -> DerivationSummary:
    return DerivationSummary(
        id=derivation.ident,
        loop=derivation.label,
        mode=derivation.mode,
        strategy=str(derivation.strategy),
        post=print_cost(derivation.post),
        norms=[str(norm) for norm in derivation.norms],
        body_cost=print_cost(derivation.body_cost) if derivation.body_cost is not None else None,
        expected_norms=[print_cost(h) for h in derivation.expected_norms],
        coefficients={name: format_rational(value) for name, value in sorted(derivation.coefficients.items())},
        bound=print_cost(derivation.bound),
        constraints=[f"{c.label}: {c}" for c in derivation.constraints],
        certified=derivation.certified,
        verified=replay.verified,
        depends_on=list(derivation.depends_on),
        notes=list(derivation.notes) + replay.failures,
    )


def cross_check_stores(variables: Sequence[str], config: RunConfig) -> List[Store]:
    """
    Stores for the oracle cross-check.

    The full Cartesian grid is used while it stays within ``max_grid_stores``;
    beyond that, the diagonal plus one axis per variable. Extra points follow.
    """
    grid = config.grid_values
    if len(grid) ** len(variables) <= config.max_grid_stores:
        stores = [Store(dict(zip(variables, values))) for values in itertools.product(grid, repeat=len(variables))]
    else:
        stores = [Store({name: value for name in variables}) for value in grid]
        for name in variables:
            stores += [Store({name: value}) for value in grid]
    stores += [Store(point) for point in config.extra_points]
    unique: List[Store] = []
    for store in stores:
        if store not in unique:
            unique.append(store)
    return unique


class AnalysisService:
    """Service for analysing, simulating and checking programs."""

    def __init__(self, config: Optional[RunConfig] = None):
        """Initialize the analysis service."""
        self.config = config or RunConfig.from_env()
        self.file_handler = ProgramFileHandler()
        self.parser = ProgramParser()
        self.corpus = ProgramCorpusRepository()

    def _load(self, path: str) -> str:
        if not self.file_handler.file_exists(path):
            raise FileNotFoundError(f"Program file not found: {path}")
        return self.file_handler.read_file_content(path)

    # -----------------------------------------------------------------
    # Analysis
    # -----------------------------------------------------------------

    def analyze_source(self, source: str, name: str = "<input>", config: Optional[RunConfig] = None) -> AnalysisReport:
        """
        Infer an expected-cost bound for a program and cross-check it against the oracle.

        Args:
            source: Program text
            name: Program name recorded in the report
            config: Run configuration; the service default when omitted

        Returns:
            AnalysisReport: Bound, per-loop derivations, cross-check rows and status
        """
        config = config or self.config
        try:
            program = self.parser.parse_program(source)
            logger.info(f"Analysing {name}")
            analyzer = LoopAnalyzer.from_config(config)
            try:
                bound = et_symbolic(CostMode.COST, program, ZERO, analyzer=analyzer)
            except LoopAnalysisError as e:
                logger.error(f"Analysis of {name} failed: {str(e)}")
                diagnostics = [str(e)] + [f"{strategy}: {reason}" for strategy, reason in e.reasons.items()]
                loops = [summarize_derivation(d, self._replay(d, config)) for d in analyzer.derivations]
                return AnalysisReport(program=name, status=ReportStatus.FAILED, loops=loops, diagnostics=diagnostics)

            replays = [(d, self._replay(d, config)) for d in analyzer.derivations]
            loops = [summarize_derivation(d, r) for d, r in replays]
            rows = self._cross_check(program, bound, config)
            status, diagnostics = self._status(replays, rows)
            logger.info(f"Analysis of {name} finished: {status.value}, bound {print_cost(bound)}")
            return AnalysisReport(
                program=name, status=status, bound=print_cost(bound), loops=loops, cross_check=rows,
                diagnostics=diagnostics,
            )

        except AnalyzerError as e:
            logger.error(f"Error analysing {name}: {str(e)}")
            raise

    def analyze_file(self, path: str, config: Optional[RunConfig] = None) -> AnalysisReport:
        return self.analyze_source(self._load(path), name=path, config=config)

    def analyze_upload(self, file: UploadFile, config: Optional[RunConfig] = None) -> AnalysisReport:
        if not self.file_handler.validate_program_upload(file):
            raise ValueError("Invalid program file")
        return self.analyze_source(self.file_handler.read_upload(file), name=file.filename, config=config)

    @staticmethod
    def _replay(derivation: LoopBoundDerivation, config: RunConfig) -> ReplayResult:
        return replay_derivation(derivation, samples=config.refute_samples, seed=config.seed)

    @staticmethod
    def _cross_check(program: Command, bound: CostExpr, config: RunConfig) -> List[CrossCheckRow]:
        variables = sorted(free_vars(program))
        rows = []
        for store in cross_check_stores(variables, config):
            bound_value = eval_cost(bound, store)
            shown = {name: store.lookup(name) for name in sorted(set(variables) | set(store.as_dict()))}
            try:
                oracle = expected_cost_oracle(program, store, config.horizon, config.max_configurations)
            except StateSpaceLimitError as e:
                rows.append(CrossCheckRow(store=shown, bound_value=format_rational(bound_value), ok=None,
                                          note=str(e)))
                continue
            rows.append(CrossCheckRow(
                store=shown,
                oracle_lower=format_rational(oracle.lower),
                bound_value=format_rational(bound_value),
                live_mass=format_rational(oracle.live_mass),
                exact=oracle.exact,
                ok=oracle.lower <= bound_value,
            ))
        logger.info(f"Cross-checked {len(rows)} store(s)")
        return rows

    @staticmethod
    def _status(replays, rows: List[CrossCheckRow]):
        diagnostics = []
        for derivation, replay in replays:
            if derivation.certified and not replay.verified:
                diagnostics += replay.failures
        if diagnostics:
            return ReportStatus.FAILED, diagnostics
        unknown = [d.ident for d, _ in replays if not d.certified]
        violated = [row for row in rows if row.ok is False]
        unchecked = [row for row in rows if row.ok is None]
        if unknown:
            diagnostics.append(f"uncertified loop bounds: {', '.join(unknown)}")
            diagnostics += [f"oracle exceeds bound at {row.store}" for row in violated]
            diagnostics += [f"cross-check unverified at {row.store}" for row in unchecked]
            return ReportStatus.CERTIFIED_WITH_UNKNOWN_LOOPS, diagnostics
        if violated:
            return ReportStatus.FAILED, [f"oracle exceeds bound at {row.store}" for row in violated]
        if unchecked:
            # oracle budget exhausted: the bound stands but is not confirmed
            diagnostics += [f"cross-check unverified at {row.store}" for row in unchecked]
            return ReportStatus.CERTIFIED_WITH_UNKNOWN_LOOPS, diagnostics
        return ReportStatus.CERTIFIED, diagnostics

    # -----------------------------------------------------------------
    # Simulation
    # -----------------------------------------------------------------

    def simulate_source(
        self,
        source: str,
        bindings: Dict[str, int],
        samples: int = 1000,
        seed: Optional[int] = None,
        horizon: Optional[int] = None,
        name: str = "<input>",
        max_steps: int = 10000,
    ) -> SimulationStatistics:
        """
        Monte Carlo statistics next to the exhaustive oracle.

        Nondeterministic choices are resolved by a seeded scheduler; the
        oracle resolves them demonically.

        Args:
            source: Program text
            bindings: Initial store
            samples: Number of runs
            seed: Seed for runs and scheduler; the configured seed when omitted
            horizon: Oracle horizon; the configured horizon when omitted
            name: Program name recorded in the report
            max_steps: Steps after which a run counts as timed out

        Returns:
            SimulationStatistics: Exact mean cost, abort and timeout rates, oracle line
        """
        if samples < 1:
            raise ValueError("samples must be positive")
        seed = self.config.seed if seed is None else seed
        horizon = horizon or self.config.horizon
        try:
            program = self.parser.parse_program(source)
            store = Store(bindings)
            scheduler = Scheduler.seeded(seed)
            rng = random.Random(seed)
            total = Fraction(0)
            aborted = timed_out = 0
            for _ in range(samples):
                outcome = sample_run(program, store, rng.getrandbits(64), scheduler, max_steps)
                total += outcome.cost
                aborted += outcome.aborted
                timed_out += outcome.timed_out
            mean = total / samples
            logger.info(f"Simulated {samples} run(s) of {name}: mean cost {float(mean):.4f}")

            statistics = SimulationStatistics(
                program=name, store=store.as_dict(), samples=samples, seed=seed,
                mean_cost=format_rational(mean), mean_cost_decimal=float(mean),
                abort_rate=format_rational(Fraction(aborted, samples)),
                timeout_rate=format_rational(Fraction(timed_out, samples)),
            )
            try:
                oracle = expected_cost_oracle(program, store, horizon, self.config.max_configurations)
                statistics.oracle_lower = format_rational(oracle.lower)
                statistics.oracle_live_mass = format_rational(oracle.live_mass)
            except StateSpaceLimitError as e:
                statistics.oracle_note = str(e)
            return statistics

        except AnalyzerError as e:
            logger.error(f"Error simulating {name}: {str(e)}")
            raise

    def simulate_file(self, path: str, bindings: Dict[str, int], **options) -> SimulationStatistics:
        return self.simulate_source(self._load(path), bindings, name=path, **options)

    def trace_source(self, source: str, bindings: Dict[str, int], steps: int, seed: Optional[int] = None) -> str:
        """Line-oriented multidistribution trace of the first ``steps`` steps."""
        program = self.parser.parse_program(source)
        seed = self.config.seed if seed is None else seed
        return format_trace(trace_run(program, Store(bindings), Scheduler.seeded(seed), steps))

    # -----------------------------------------------------------------
    # Upper invariants
    # -----------------------------------------------------------------

    def check_source(self, source: str, invariants_text: str, name: str = "<input>",
                     config: Optional[RunConfig] = None) -> CheckReport:
        """
        Check candidate upper invariants, one per loop label.

        Loops without a candidate are reported as unknown.

        Raises:
            InvariantFileError: malformed invariant text or labels naming no loop
        """
        config = config or self.config
        try:
            program = self.parser.parse_program(source)
            invariants = self.file_handler.parse_invariants(invariants_text)
            loops = while_loops(program)
            labels = {loop_label(loop) for loop in loops}
            unknown = sorted(set(invariants) - labels)
            if unknown:
                raise InvariantFileError(f"unknown loop label(s): {', '.join(unknown)}")

            analyzer = LoopAnalyzer.from_config(config)
            checks = []
            for loop in loops:
                label = loop_label(loop)
                candidate = invariants.get(label)
                if candidate is None:
                    checks.append(InvariantCheck(loop=label, invariant="", verdict=Verdict.UNKNOWN,
                                                 detail="no candidate invariant"))
                    continue
                verdict = check_upper_invariant(CostMode.COST, loop, ZERO, candidate, analyzer,
                                                samples=config.refute_samples, seed=config.seed)
                checks.append(InvariantCheck(
                    loop=label,
                    invariant=print_cost(candidate),
                    verdict=verdict.verdict,
                    witness=verdict.witness.as_dict() if verdict.witness is not None else None,
                    detail=verdict.detail or None,
                ))
            all_certified = all(check.verdict == Verdict.CERTIFIED for check in checks)
            logger.info(f"Checked {len(checks)} loop(s) of {name}")
            return CheckReport(program=name, checks=checks, all_certified=all_certified)

        except AnalyzerError as e:
            logger.error(f"Error checking {name}: {str(e)}")
            raise

    def check_file(self, path: str, invariants_path: str, config: Optional[RunConfig] = None) -> CheckReport:
        return self.check_source(self._load(path), self._load(invariants_path), name=path, config=config)

    # -----------------------------------------------------------------
    # Corpus
    # -----------------------------------------------------------------

    def run_corpus(self, directory: Optional[str] = None, config: Optional[RunConfig] = None) -> CorpusReport:
        """Analyse every program of a directory, sorted by path."""
        reports = []
        for path in self.corpus.list_programs(directory):
            name = os.path.relpath(path, directory or self.corpus.root)
            try:
                reports.append(self.analyze_source(self._load(path), name=name, config=config))
            except AnalyzerError as e:
                reports.append(AnalysisReport(program=name, status=ReportStatus.FAILED, diagnostics=[str(e)]))
        return CorpusReport(reports=reports)

    def get_health_status(self) -> Dict[str, Any]:
        return {
            "status": "healthy",
            "service": "pwhile-cost-analyzer",
            "version": "1.0.0",
            "components": {
                "parser": "operational",
                "analyzer": "operational",
                "oracle": "operational",
                "corpus": "operational",
            },
        }

    def get_supported_formats(self) -> List[str]:
        return self.file_handler.get_supported_formats()
