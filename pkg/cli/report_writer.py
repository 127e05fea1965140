"""CSV/JSON report files.

Everything except ``metadata.json`` is byte-reproducible: numbers are written in
scientific notation with ``settings.csv_digits`` significant digits and JSON keys
keep model field order.
"""

import csv
import json
import platform
from collections.abc import Iterable, Sequence
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from common.logger import get_logger
from common.schemas import AcceptanceOutcome, ExperimentConfig, KFitReport, SweepReport
from common.settings import settings
from numerics.fourier_diagnostics import FourierTable
from numerics.interface_spectrum import Spectrum
from numerics.shell_solver import CollarMode, ShellEigenResult

UTC = timezone.utc

logger = get_logger(__name__)

Cell = int | float | str | None


def format_cell(value: Cell) -> str:
    """CSV cell text: floats in round-trip scientific notation, None as empty."""
    if value is None:
        return ""
    if isinstance(value, bool | int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return f"{float(value):.{settings.csv_digits - 1}e}"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> Path:
    """Write a comma-separated table with a header row."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
    logger.debug(f"Wrote {path}")
    return path


def write_spectrum(spectrum: Spectrum, out_dir: Path) -> Path:
    """spectrum.csv with columns (k, lambda, cluster_id)."""
    return write_csv(out_dir / "spectrum.csv", ["k", "lambda", "cluster_id"], spectrum.to_rows())


def write_spectrum_nodal(spectrum: Spectrum, out_dir: Path) -> Path | None:
    """Nodal table (theta, phi_1, …, phi_K) of a discrete curve spectrum; None for spheres."""
    if spectrum.mesh is None:
        logger.info("Sphere spectra are analytic; no nodal dump written")
        return None
    header = ["theta", *(f"phi_{k}" for k in range(1, spectrum.count + 1))]
    return write_csv(out_dir / "spectrum_eigenfunctions.csv", header, spectrum.nodal_rows())


def write_shell_nodal(result: ShellEigenResult, out_dir: Path) -> Path | None:
    """Nodal table (theta, tau, mode_1, …) of a collar solve; radial solves are written as (rho, l, mode_j)."""
    name = f"shell_eigenfunctions_eps_{result.epsilon:.6e}.csv"
    first = result.modes[0]
    if isinstance(first, CollarMode):
        grid = first.grid
        theta = np.repeat(grid.theta_mesh.nodes, grid.tau_nodes)
        tau = np.tile(grid.tau_mesh.nodes, grid.theta_mesh.nodes.size)
        columns = [theta, tau, *(mode.nodal for mode in result.modes)]  # type: ignore[union-attr]
        header = ["theta", "tau", *(f"mode_{k}" for k in range(1, result.count + 1))]
        return write_csv(out_dir / name, header, np.column_stack(columns).tolist())

    rows: list[list[Cell]] = []
    for k, mode in enumerate(result.modes, start=1):
        assert not isinstance(mode, CollarMode)
        rho = mode.radial.problem.mesh.nodes
        values = mode.radial.vectors[:, mode.radial_index]
        rows.extend([k, mode.harmonic.degree, float(x), float(u)] for x, u in zip(rho, values, strict=True))
    return write_csv(out_dir / name, ["k", "l", "rho", "u"], rows)


def _fit_rows(fit: KFitReport) -> list[list[Cell]]:
    eps = np.array(fit.epsilons)
    fitted = fit.intercept + fit.slope * eps + (fit.curvature or 0.0) * eps**2
    return [
        [float(e), float(lam), float(model), float(lam - model)]
        for e, lam, model in zip(eps, fit.values, fitted, strict=True)
    ]


def write_sweep(report: SweepReport, out_dir: Path) -> list[Path]:
    """report.json, sweep_k{k}.csv (epsilon, lambda, fitted, residual) and runs.csv."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "report.json"]
    paths[0].write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")

    for fit in report.fits:
        paths.append(write_csv(out_dir / f"sweep_k{fit.k}.csv", ["epsilon", "lambda", "fitted", "residual"],
                               _fit_rows(fit)))

    run_rows: list[list[Cell]] = []
    for fit in report.fits:
        for eps, value, index in zip(fit.epsilons, fit.values, fit.indices, strict=True):
            run = next(run for run in report.runs if run.epsilon == eps)
            run_rows.append([eps, fit.k, index, value, run.solver_path, run.mesh, run.max_residual])
    paths.append(write_csv(out_dir / "runs.csv",
                           ["epsilon", "k", "index", "lambda", "solver_path", "mesh", "residual"], run_rows))
    logger.info(f"Wrote sweep report for k={[fit.k for fit in report.fits]} to {out_dir}")
    return paths


def write_acceptance(outcomes: Sequence[AcceptanceOutcome], out_dir: Path) -> Path:
    """acceptance.csv (name, k, quantity, value, expected, passed)."""
    rows = [[o.name, o.k, o.quantity, o.value, o.expected, int(o.passed)] for o in outcomes]
    return write_csv(out_dir / "acceptance.csv", ["name", "k", "quantity", "value", "expected", "passed"], rows)


def write_alpha_table(tables: Sequence[FourierTable], out_dir: Path) -> list[Path]:
    """alpha_table.csv (k, epsilon, p, l, alpha) and tail_sums.csv per (k, ε)."""
    alpha_rows: list[list[Cell]] = []
    tail_rows: list[list[Cell]] = []
    for table in tables:
        for p, row in enumerate(table.alpha, start=1):
            alpha_rows.extend([table.k, table.epsilon, p, l, float(a)] for l, a in enumerate(row, start=1))
        tail_rows.append([table.k, table.epsilon, table.transverse_tail, table.longitudinal_mass,
                          table.cluster_mass])
    return [
        write_csv(out_dir / "alpha_table.csv", ["k", "epsilon", "p", "l", "alpha"], alpha_rows),
        write_csv(out_dir / "tail_sums.csv",
                  ["k", "epsilon", "transverse_tail", "longitudinal_mass", "cluster_mass"], tail_rows),
    ]


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


def write_metadata(config: ExperimentConfig, command: str, out_dir: Path, extra: dict[str, Any] | None = None) -> Path:
    """metadata.json: timestamps, versions and a settings snapshot (not byte-reproducible)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    payload: dict[str, Any] = {
        "scenario": config.scenario,
        "command": command,
        "created_at": datetime.now(UTC).isoformat(),
        "python": platform.python_version(),
        "versions": {name: _version(name) for name in ("shell-lab", "numpy", "scipy", "pydantic")},
        "settings": settings.model_dump(),
    }
    if extra:
        payload.update(extra)
    path = out_dir / "metadata.json"
    path.write_text(json.dumps(payload, indent=2, default=str) + "\n", encoding="utf-8")
    return path


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    """Write a JSON document with stable key order."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path
