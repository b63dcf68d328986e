#!/usr/bin/env python3
"""
Tests for the command-line interface and its exit codes.
"""

import json
import os
import shutil

import pytest
from click.testing import CliRunner

from app.core.analysis_service import AnalysisService
from app.core.models import ReportStatus, RunConfig
from app.presentation.cli import main, parse_bindings, render_report


@pytest.fixture
def runner(monkeypatch):
    monkeypatch.setenv("PWHILE_REFUTE_SAMPLES", "300")
    return CliRunner()


def test_analyze_certified(runner, data_path):
    """Test that a certified analysis exits with 0 and prints the bound."""
    result = runner.invoke(main, ["analyze", data_path("countdown.pw")])
    assert result.exit_code == 0
    assert "status: certified" in result.output
    assert "bound: nat(x)" in result.output
    assert "cross-check:" in result.output


def test_analyze_json_report(runner, data_path):
    """Test the JSON report of the analyze command."""
    result = runner.invoke(main, ["analyze", data_path("countdown.pw"), "--json"])
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert report["schema_version"] == 1
    assert report["status"] == "certified"
    assert report["bound"] == "nat(x)"
    (loop,) = report["loops"]
    assert loop["loop"] == "loop0"
    assert loop["strategy"] == "decompose(degree 1)"
    assert loop["verified"] is True
    assert all(row["ok"] for row in report["cross_check"])


def test_analyze_uncertified_strategy(runner, data_path):
    """Test that an unrolled loop bound exits with 1."""
    result = runner.invoke(main, ["analyze", data_path("countdown.pw"), "--strategy", "unroll"])
    assert result.exit_code == 1
    assert "certified-with-unknown-loops" in result.output


def test_analyze_failed(runner, data_path):
    """Test that an unsupported loop exits with 2."""
    result = runner.invoke(main, ["analyze", data_path("nonlinear_guard.pw")])
    assert result.exit_code == 2
    assert "status: failed" in result.output


def test_analyze_syntax_error(runner, tmp_path):
    """Test that a parse error exits with 3."""
    path = tmp_path / "broken.pw"
    path.write_text("skip;\nx := ;\n")
    result = runner.invoke(main, ["analyze", str(path), "--json"])
    assert result.exit_code == 3
    assert "ProgramSyntaxError" in result.output


def test_analyze_missing_file(runner, tmp_path):
    """Test that a missing program exits with 3."""
    result = runner.invoke(main, ["analyze", str(tmp_path / "missing.pw")])
    assert result.exit_code == 3
    assert "not found" in result.output


def test_analyze_rejects_degree(runner, data_path):
    """Test that an out-of-range degree is an input error."""
    result = runner.invoke(main, ["analyze", data_path("countdown.pw"), "--degree", "3"])
    assert result.exit_code == 3


def test_simulate_json(runner, data_path):
    """Test simulation statistics of the countdown loop."""
    result = runner.invoke(main, ["simulate", data_path("countdown.pw"), "--set", "x=3", "--samples", "50", "--json"])
    assert result.exit_code == 0
    statistics = json.loads(result.output)
    assert statistics["mean_cost"] == "3"
    assert statistics["abort_rate"] == "0"
    assert statistics["timeout_rate"] == "0"
    assert statistics["oracle_lower"] == "3"
    assert statistics["store"] == {"x": 3}


def test_simulate_trace(runner, data_path):
    """Test the trace option of the simulate command."""
    result = runner.invoke(main, ["simulate", data_path("countdown.pw"), "--set", "x=1", "--samples", "5",
                                  "--trace", "3"])
    assert result.exit_code == 0
    assert "mean cost: 1" in result.output
    trace = result.output.split("trace:\n", 1)[1].splitlines()
    assert len(trace) == 4
    assert trace[0].startswith("0\t0\t1: <while")


def test_simulate_bad_binding(runner, data_path):
    """Test that malformed bindings exit with 3."""
    result = runner.invoke(main, ["simulate", data_path("countdown.pw"), "--set", "x3"])
    assert result.exit_code == 3


@pytest.mark.parametrize("invariants, code, verdict", [
    ("countdown.inv", 0, "certified"),
    ("countdown_half.inv", 2, "refuted"),
    ("empty.inv", 1, "unknown"),
])
def test_check_exit_codes(runner, data_path, invariants, code, verdict):
    """Test check verdicts and their exit codes on the countdown loop."""
    result = runner.invoke(main, ["check", data_path("countdown.pw"), "--invariants", data_path(invariants), "--json"])
    assert result.exit_code == code
    (check,) = json.loads(result.output)["checks"]
    assert check["verdict"] == verdict


def test_check_refutation_witness(runner, data_path):
    """Test that the text report shows the witness store."""
    result = runner.invoke(main, ["check", data_path("countdown.pw"), "--invariants", data_path("countdown_half.inv")])
    assert "loop0: refuted (1/2 * nat(x)) witness" in result.output
    assert result.exit_code == 2


def test_check_loop_free_program(runner, data_path):
    """Test that a program without loops trivially passes."""
    result = runner.invoke(main, ["check", data_path("loop_free_demo.pw"), "--invariants", data_path("empty.inv")])
    assert result.exit_code == 0
    assert "no loops" in result.output


def test_check_unknown_label(runner, data_path, tmp_path):
    """Test that invariants for unknown loops are input errors."""
    path = tmp_path / "wrong.inv"
    path.write_text("loop7: nat(x)\n")
    result = runner.invoke(main, ["check", data_path("countdown.pw"), "--invariants", str(path)])
    assert result.exit_code == 3
    assert "loop7" in result.output


def test_corpus_command(runner, data_path, tmp_path):
    """Test the corpus command on a small directory."""
    for name in ("countdown.pw", "abort_demo.pw", "countdown.inv"):
        shutil.copy(data_path(name), tmp_path / name)
    result = runner.invoke(main, ["corpus", str(tmp_path), "--json"])
    assert result.exit_code == 0
    reports = json.loads(result.output)["reports"]
    assert [r["program"] for r in reports] == ["abort_demo.pw", "countdown.pw"]
    assert [r["bound"] for r in reports] == ["0", "nat(x)"]


def test_corpus_missing_directory(runner, tmp_path):
    """Test that a missing corpus directory exits with 3."""
    result = runner.invoke(main, ["corpus", os.path.join(str(tmp_path), "nowhere")])
    assert result.exit_code == 3


def test_parse_bindings():
    """Test store bindings from the command line."""
    assert parse_bindings(("x=3", " y = -2")) == {"x": 3, "y": -2}
    assert parse_bindings(()) == {}
    for bad in ("x", "=3", "x=abc", "1x=2"):
        with pytest.raises(ValueError):
            parse_bindings((bad,))


def test_output_format_from_environment(runner, monkeypatch, data_path):
    """Test that PWHILE_OUTPUT_FORMAT selects the JSON report without the flag."""
    monkeypatch.setenv("PWHILE_OUTPUT_FORMAT", "json")
    result = runner.invoke(main, ["analyze", data_path("countdown.pw")])
    assert result.exit_code == 0
    assert json.loads(result.output)["bound"] == "nat(x)"


def test_render_unchecked_cross_check_rows(data_path):
    """Test the text report for rows the oracle could not explore."""
    config = RunConfig(grid_values=[0, 1], refute_samples=300, max_configurations=3)
    report = AnalysisService(config).analyze_file(data_path("biased_walk.pw"))
    assert report.status == ReportStatus.CERTIFIED_WITH_UNKNOWN_LOOPS
    text = render_report(report)
    assert "unchecked" in text
    assert "diagnostic: cross-check unverified at {'x': 1}" in text
