"""Tests for the scenario runner."""

import json

import pytest

from cli.config_loader import parse_experiment
from cli.runner import OracleRow, ScenarioRunner

CIRCLE = """\
scenario: circle
interface:
  kind: sphere
  n: 2
  r: 1.0
k: [2]
epsilons: [0.08, 0.04, 0.02, 0.01]
spectrum:
  count: 4
acceptance:
  - k: 2
    quantity: intercept
    target: predicted
    rel_tol: 1.0e-3
"""


class TestOracleRow:
    """Relative differences against a reference."""

    def test_relative_to_reference(self):
        row = OracleRow(label="x", computed=10.0 + 1e-8, reference=10.0, tolerance=1e-8)
        assert row.rel_diff == pytest.approx(1e-9)
        assert row.passed

    def test_absolute_near_zero(self):
        row = OracleRow(label="x", computed=1e-7, reference=0.0, tolerance=1e-8)
        assert row.rel_diff == pytest.approx(1e-7)
        assert not row.passed


class TestScenarioRunner:
    """Commands run into a temporary output directory."""

    def test_default_output_directory(self):
        runner = ScenarioRunner(parse_experiment(CIRCLE))
        assert str(runner.out_dir).replace("\\", "/") == "results/circle"

    def test_spectrum(self, tmp_path):
        outcome = ScenarioRunner(parse_experiment(CIRCLE), out_dir=tmp_path, oracle_check=True).spectrum()
        assert outcome.passed
        assert outcome.oracle == []
        assert (tmp_path / "spectrum.csv").exists()
        assert (tmp_path / "oracle.csv").exists()
        assert (tmp_path / "metadata.json").exists()

    def test_sweep_with_shooting_oracle(self, tmp_path):
        runner = ScenarioRunner(parse_experiment(CIRCLE), out_dir=tmp_path, oracle_check=True, dump_eigenfunctions=True)
        outcome = runner.sweep()
        assert outcome.passed
        assert len(outcome.oracle) == 9
        assert [o.passed for o in outcome.acceptance] == [True]
        names = {path.name for path in outcome.paths}
        assert {"report.json", "sweep_k2.csv", "runs.csv", "acceptance.csv", "oracle.csv"} <= names
        assert "shell_eigenfunctions_eps_1.000000e-02.csv" in names
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["fits"][0]["k"] == 2
        assert "max_flux_jump" in json.loads((tmp_path / "metadata.json").read_text())

    def test_diagnostics(self, tmp_path):
        config = parse_experiment(CIRCLE + "diagnostics:\n  p_max: 4\n  l_max: 3\n")
        outcome = ScenarioRunner(config, out_dir=tmp_path).diagnostics()
        assert list(outcome.tables) == [2]
        orders = json.loads((tmp_path / "tail_orders.json").read_text())
        assert orders["2"]["transverse_tail_order"] >= 1.8
        header = (tmp_path / "alpha_table.csv").read_text().splitlines()[0]
        assert header == "k,epsilon,p,l,alpha"
