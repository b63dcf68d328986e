#!/usr/bin/env python3
"""
End-to-end tests over the bundled corpus, plus the service's configuration,
cross-check grid and invariant-file handling.
"""

from fractions import Fraction

import pytest
from pydantic import ValidationError

from app.core.analysis_service import AnalysisService, cross_check_stores
from app.core.exceptions import InvariantFileError, ProgramSyntaxError
from app.core.models import ReportStatus, RunConfig, Verdict
from app.core.syntax import Store, eval_cost
from app.infrastructure.corpus_repository import ProgramCorpusRepository
from app.infrastructure.file_handler import ProgramFileHandler
from app.infrastructure.program_parser import parse_cost_expr

EXPECTED_STATUS = {
    "abort_demo.pw": ReportStatus.CERTIFIED,
    "biased_walk.pw": ReportStatus.CERTIFIED,
    "countdown.pw": ReportStatus.CERTIFIED,
    "geometric.pw": ReportStatus.CERTIFIED,
    "loop_free_demo.pw": ReportStatus.CERTIFIED,
    "nested_triangle.pw": ReportStatus.CERTIFIED,
    "nonlinear_guard.pw": ReportStatus.FAILED,
}


@pytest.fixture(scope="module")
def corpus_report():
    config = RunConfig(grid_values=[0, 1, 2, 3, 5], refute_samples=300, max_grid_stores=36)
    return AnalysisService(config).run_corpus()


def test_corpus_statuses(corpus_report):
    """Test the status of every bundled program."""
    assert {r.program: r.status for r in corpus_report.reports} == EXPECTED_STATUS


def test_corpus_cross_checks_hold(corpus_report):
    """Test that no certified bound is exceeded by the oracle."""
    for report in corpus_report.reports:
        if report.status == ReportStatus.CERTIFIED:
            assert report.cross_check
            assert all(row.ok for row in report.cross_check), report.program


def test_corpus_bounds(corpus_report):
    """Test the bounds inferred for the bundled programs."""
    reports = {r.program: r for r in corpus_report.reports}
    assert reports["countdown.pw"].bound == "nat(x)"
    assert reports["biased_walk.pw"].bound == "2 * nat(x)"
    assert reports["abort_demo.pw"].bound == "0"
    assert eval_cost(parse_cost_expr(reports["loop_free_demo.pw"].bound), Store()) == Fraction(17, 6)
    nested = parse_cost_expr(reports["nested_triangle.pw"].bound)
    assert [eval_cost(nested, Store.of(x=n)) for n in range(6)] == [0, 1, 3, 6, 10, 15]
    assert reports["nonlinear_guard.pw"].bound is None


def test_corpus_is_deterministic(corpus_report, service):
    """Test that a second run produces an identical report."""
    assert service.run_corpus().model_dump_json() == corpus_report.model_dump_json()


def test_nested_report_records_dependencies(corpus_report):
    """Test that the outer derivation lists the inner derivations it used."""
    nested = next(r for r in corpus_report.reports if r.program == "nested_triangle.pw")
    outer = next(loop for loop in nested.loops if loop.loop == "loop0")
    inner_ids = {loop.id for loop in nested.loops if loop.loop == "loop1"}
    assert set(outer.depends_on) & inner_ids
    assert all(loop.verified for loop in nested.loops)


def test_analyze_source_loop_free(service):
    """Test that a program without loops is certified with its exact cost."""
    report = service.analyze_source("tick(2); { tick(1) } [1/2] { skip }")
    assert report.status == ReportStatus.CERTIFIED
    assert eval_cost(parse_cost_expr(report.bound), Store()) == Fraction(5, 2)
    assert report.loops == []
    assert all(row.exact for row in report.cross_check)


def test_analyze_source_syntax_error(service):
    """Test that parse errors propagate."""
    with pytest.raises(ProgramSyntaxError):
        service.analyze_source("tick(")


def test_simulate_source(service):
    """Test Monte Carlo statistics and the oracle line."""
    statistics = service.simulate_source("{ tick(1) } [1/2] { abort }", {}, samples=400, seed=3)
    assert statistics.samples == 400
    assert statistics.oracle_lower == "1/2"
    assert 0.4 <= statistics.mean_cost_decimal <= 0.6
    assert Fraction(statistics.abort_rate) + Fraction(statistics.mean_cost) == 1
    with pytest.raises(ValueError):
        service.simulate_source("skip", {}, samples=0)


def test_simulate_same_seed_same_statistics(service):
    """Test reproducibility of simulation under a fixed seed."""
    source = "while [true] (x = 1) { { x := 0 } [1/2] { skip }; tick(1) }"
    first = service.simulate_source(source, {"x": 1}, samples=200, seed=9)
    second = service.simulate_source(source, {"x": 1}, samples=200, seed=9)
    assert first == second


def test_trace_source(service):
    """Test the textual trace."""
    lines = service.trace_source("tick(1)", {}, steps=5).splitlines()
    assert lines == ["0\t0\t1: <tick(1)>({})", "1\t1\t1: {}"]


def test_check_source_without_candidate(service):
    """Test that loops without a candidate are unknown."""
    report = service.check_source("while [true] (x > 0) { x := x - 1 }", "")
    assert not report.all_certified
    assert report.checks[0].verdict == Verdict.UNKNOWN
    assert report.checks[0].detail == "no candidate invariant"


def test_cross_check_grid():
    """Test the Cartesian grid and its fallback beyond the cap."""
    config = RunConfig(grid_values=[0, 1, 2, 3, 5], max_grid_stores=36, extra_points=[{"x": 7}])
    assert len(cross_check_stores(["x", "y"], config)) == 26
    stores = cross_check_stores(["x", "y", "z"], config)
    assert len(stores) == 18
    assert Store.of(x=5, y=5, z=5) in stores
    assert Store.of(z=3) in stores
    assert stores[-1] == Store.of(x=7)


def test_run_config_from_env(monkeypatch):
    """Test environment configuration and explicit overrides."""
    monkeypatch.setenv("PWHILE_MAX_DEGREE", "1")
    monkeypatch.setenv("PWHILE_HORIZON", "50")
    config = RunConfig.from_env(horizon=80, seed=None)
    assert config.max_degree == 1
    assert config.horizon == 80
    assert config.seed == 0
    monkeypatch.setenv("PWHILE_HORIZON", "0")
    with pytest.raises(ValidationError):
        RunConfig.from_env()


def test_run_config_rejects_empty_strategy_order():
    """Test configuration validation."""
    with pytest.raises(ValidationError):
        RunConfig(strategy_order=[])
    with pytest.raises(ValidationError):
        RunConfig(grid_values=[])


def test_parse_invariants():
    """Test invariant file parsing."""
    invariants = ProgramFileHandler.parse_invariants("# header\n\nloop0: nat(x)  # tight\nloop1: 1/2 * nat(y)\n")
    assert sorted(invariants) == ["loop0", "loop1"]
    assert invariants["loop0"] == parse_cost_expr("nat(x)")
    for text in ("loop0 nat(x)", "loop0: nat(x)\nloop0: 1", "loop0: nat(", ": 1"):
        with pytest.raises(InvariantFileError):
            ProgramFileHandler.parse_invariants(text)


def test_corpus_repository(tmp_path, data_path):
    """Test program discovery in the corpus directory."""
    repository = ProgramCorpusRepository()
    names = [path.rsplit("/", 1)[-1] for path in repository.list_programs()]
    assert names == sorted(EXPECTED_STATUS)
    assert repository.program_path("countdown") == data_path("countdown.pw")
    assert repository.invariant_path("countdown") == data_path("countdown.inv")
    with pytest.raises(FileNotFoundError):
        repository.program_path("missing")
    with pytest.raises(FileNotFoundError):
        repository.list_programs(str(tmp_path / "nowhere"))


def test_cross_check_beyond_oracle_budget_is_not_certified(service, data_path):
    """Test that rows the oracle could not explore are unchecked and block the certified status."""
    config = RunConfig(grid_values=[0, 1, 2, 3], refute_samples=300, max_configurations=3)
    report = service.analyze_file(data_path("biased_walk.pw"), config=config)
    assert report.bound == "2 * nat(x)"
    assert all(loop.verified for loop in report.loops)
    assert report.status == ReportStatus.CERTIFIED_WITH_UNKNOWN_LOOPS
    unchecked = [row for row in report.cross_check if row.ok is None]
    assert [row.store for row in unchecked] == [{"x": 1}, {"x": 2}, {"x": 3}]
    assert all(row.oracle_lower is None and row.note for row in unchecked)
    assert [row.ok for row in report.cross_check if row.store == {"x": 0}] == [True]
    assert sum("cross-check unverified" in d for d in report.diagnostics) == 3
