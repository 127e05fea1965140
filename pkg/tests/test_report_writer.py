"""Tests for CSV and JSON report files."""

import json

import numpy as np

from cli import report_writer
from cli.config_loader import parse_experiment
from numerics.interface_spectrum import sphere_spectrum
from numerics.shell_solver import solve_curve_shell, solve_sphere_shell

CONFIG = "scenario: report\ninterface:\n  kind: sphere\n  n: 2\n  r: 1.0\n"


class TestFormatCell:
    """Cell text of the CSV files."""

    def test_floats_keep_seventeen_digits(self):
        assert report_writer.format_cell(0.1) == "1.0000000000000001e-01"
        assert report_writer.format_cell(np.float64(1.5)) == "1.5000000000000000e+00"
        assert float(report_writer.format_cell(2.0 / 3.0)) == 2.0 / 3.0

    def test_other_cells(self):
        assert report_writer.format_cell(None) == ""
        assert report_writer.format_cell(3) == "3"
        assert report_writer.format_cell(np.int64(4)) == "4"
        assert report_writer.format_cell(True) == "1"
        assert report_writer.format_cell("collar") == "collar"


class TestWriters:
    """Files written into an output directory."""

    def test_spectrum_csv(self, tmp_path):
        path = report_writer.write_spectrum(sphere_spectrum(2, 1.0, 3), tmp_path / "out")
        assert path.read_text().splitlines() == [
            "k,lambda,cluster_id",
            "1,0.0000000000000000e+00,1",
            "2,1.0000000000000000e+00,2",
            "3,1.0000000000000000e+00,2",
        ]

    def test_cluster_ids(self, tmp_path):
        path = report_writer.write_spectrum(sphere_spectrum(3, 1.0, 4), tmp_path)
        rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
        assert [(int(k), float(lam), int(c)) for k, lam, c in rows] == [(1, 0.0, 1), (2, 2.0, 2), (3, 2.0, 2), (4, 2.0, 2)]

    def test_sphere_spectrum_has_no_nodal_table(self, tmp_path):
        assert report_writer.write_spectrum_nodal(sphere_spectrum(3, 1.0, 4), tmp_path) is None

    def test_collar_nodal_table(self, tmp_path, circle, two_phase):
        result = solve_curve_shell(circle, two_phase, 0.05, 3, xi_nodes=32, tau_elements=4)
        path = report_writer.write_shell_nodal(result, tmp_path)
        assert path is not None
        assert path.name == "shell_eigenfunctions_eps_5.000000e-02.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == "theta,tau,mode_1,mode_2,mode_3"
        assert len(lines) == 1 + 32 * 9
        first = [float(cell) for cell in lines[1].split(",")]
        assert first[:2] == [0.0, -1.0]

    def test_radial_nodal_table(self, tmp_path, two_phase):
        result = solve_sphere_shell(2, 1.0, two_phase, 0.05, 3, elements_per_side=4)
        path = report_writer.write_shell_nodal(result, tmp_path)
        assert path is not None
        lines = path.read_text().splitlines()
        assert lines[0] == "k,l,rho,u"
        assert len(lines) == 1 + 3 * 17
        assert [line.split(",")[1] for line in lines[1::17]] == ["0", "1", "1"]

    def test_csv_output_is_reproducible(self, tmp_path):
        rows = [[1, 0.25, None, "radial"]]
        first = report_writer.write_csv(tmp_path / "a.csv", ["k", "x", "y", "path"], rows).read_bytes()
        second = report_writer.write_csv(tmp_path / "b.csv", ["k", "x", "y", "path"], rows).read_bytes()
        assert first == second == b"k,x,y,path\n1,2.5000000000000000e-01,,radial\n"

    def test_metadata(self, tmp_path):
        config = parse_experiment(CONFIG)
        path = report_writer.write_metadata(config, "spectrum", tmp_path, {"max_flux_jump": 1e-9})
        payload = json.loads(path.read_text())
        assert payload["scenario"] == "report"
        assert payload["command"] == "spectrum"
        assert payload["max_flux_jump"] == 1e-9
        assert payload["settings"]["csv_digits"] == 17
        assert set(payload["versions"]) == {"shell-lab", "numpy", "scipy", "pydantic"}
