"""Tests for experiment config parsing."""

from pathlib import Path

import pytest

from cli.config_loader import load_experiment, parse_experiment
from common.errors import ConfigError
from common.schemas import CurveInterface, SphereInterface

SCENARIOS = sorted((Path(__file__).parents[1] / "scenarios").glob("*.yaml"))

MINIMAL = """\
scenario: minimal
interface:
  kind: sphere
  n: 3
  r: 1.0
"""


class TestParseExperiment:
    """YAML documents into validated configs."""

    def test_defaults(self):
        config = parse_experiment(MINIMAL)
        assert isinstance(config.interface, SphereInterface)
        assert config.k == [2]
        assert config.coefficients.sigma_plus == 2.0
        assert config.fit.degree == 2
        assert config.to_sweep_config().diagnostics is None

    def test_diagnostics_follow_flag(self):
        config = parse_experiment(MINIMAL + "flags:\n  run_diagnostics: true\n")
        assert config.to_sweep_config().diagnostics == config.diagnostics

    def test_curve_interface(self):
        text = "scenario: ellipse\ninterface:\n  kind: curve\n  coefficients: [[[0, 0], [0, 0]], [[2, 0], [0, 1]]]\n"
        config = parse_experiment(text)
        assert isinstance(config.interface, CurveInterface)
        assert config.interface == CurveInterface.ellipse(2.0, 1.0)

    def test_unknown_key_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment(MINIMAL + "bogus: 1\n", "exp.yaml")
        assert excinfo.value.line == 6
        assert "bogus" in str(excinfo.value)
        assert str(excinfo.value).startswith("exp.yaml:6:")

    def test_nested_error_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment(MINIMAL.replace("n: 3", "n: 1"))
        assert excinfo.value.line == 4
        assert "interface" in excinfo.value.message

    def test_sequence_error_line(self):
        text = MINIMAL + "acceptance:\n  - k: 2\n    quantity: slope\n    target: 0.0\n"
        with pytest.raises(ConfigError, match="abs_tol or rel_tol") as excinfo:
            parse_experiment(text)
        assert excinfo.value.line == 7

    def test_yaml_syntax_error(self):
        with pytest.raises(ConfigError, match="invalid YAML") as excinfo:
            parse_experiment("scenario: x\n  bad: 1\n")
        assert excinfo.value.line == 2

    def test_document_must_be_mapping(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment("- just\n- a list\n")
        assert excinfo.value.line == 1


class TestLoadExperiment:
    """Config files on disk."""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_experiment(tmp_path / "absent.yaml")

    @pytest.mark.parametrize("path", SCENARIOS, ids=[p.stem for p in SCENARIOS])
    def test_bundled_scenarios(self, path):
        config = load_experiment(path)
        assert config.scenario == path.stem
