"""Scenario runner: experiment config in, numerics run, report files out."""

from dataclasses import dataclass, field
from pathlib import Path

from cli import report_writer
from common.logger import get_logger
from common.schemas import AcceptanceOutcome, CurveInterface, ExperimentConfig, SweepReport
from numerics.fem import CurveMesh1D
from numerics.fourier_diagnostics import FourierTable
from numerics.interface_spectrum import Spectrum, interface_spectrum
from numerics.radial import RadialProblem, shooting_oracle, solve_radial_mode
from numerics.shell_solver import ShellEigenResult
from numerics.sweep import evaluate_acceptance, run_diagnostics, run_sweep, scaled_epsilons, tail_sum_report

logger = get_logger(__name__)

SHOOTING_REL_TOL = 1e-8
REFINEMENT_REL_TOL = 1e-5
ORACLE_DEGREES = 3


@dataclass(frozen=True)
class OracleRow:
    """One independent cross-check of a computed eigenvalue."""

    label: str
    computed: float
    reference: float
    tolerance: float

    @property
    def rel_diff(self) -> float:
        """|computed − reference| / max(1, |reference|)."""
        return abs(self.computed - self.reference) / max(1.0, abs(self.reference))

    @property
    def passed(self) -> bool:
        """True when the relative difference is within tolerance."""
        return self.rel_diff <= self.tolerance


@dataclass
class RunOutcome:
    """Files and verdicts of one command run."""

    paths: list[Path] = field(default_factory=list)
    acceptance: list[AcceptanceOutcome] = field(default_factory=list)
    oracle: list[OracleRow] = field(default_factory=list)
    spectrum: Spectrum | None = None
    report: SweepReport | None = None
    tables: dict[int, list[FourierTable]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """True when every acceptance threshold and oracle row holds."""
        return all(o.passed for o in self.acceptance) and all(row.passed for row in self.oracle)


class ScenarioRunner:
    """Runs the commands of one experiment config into an output directory."""

    def __init__(
        self,
        config: ExperimentConfig,
        out_dir: str | Path | None = None,
        threads: int | None = None,
        dump_eigenfunctions: bool | None = None,
        oracle_check: bool | None = None,
    ) -> None:
        """Initialize scenario runner.

        Args:
            config: Validated experiment config
            out_dir: Output directory (default ``output.directory/scenario``)
            threads: Worker threads for ε solves
            dump_eigenfunctions: Override of ``flags.dump_eigenfunctions``
            oracle_check: Override of ``flags.oracle_check``
        """
        self.config = config
        self.out_dir = Path(out_dir) if out_dir is not None else Path(config.output.directory) / config.scenario
        self.threads = threads
        self.dump_eigenfunctions = config.flags.dump_eigenfunctions if dump_eigenfunctions is None else dump_eigenfunctions
        self.oracle_check = config.flags.oracle_check if oracle_check is None else oracle_check

    def _mesh(self) -> CurveMesh1D | None:
        if isinstance(self.config.interface, CurveInterface):
            return CurveMesh1D(self.config.mesh.curve_nodes)
        return None

    def spectrum(self) -> RunOutcome:
        """Interface spectrum to spectrum.csv (plus nodal table and oracle cross-check when requested)."""
        count = self.config.spectrum.count
        spectrum = interface_spectrum(self.config.interface, count, self._mesh())
        outcome = RunOutcome(spectrum=spectrum)
        outcome.paths.append(report_writer.write_spectrum(spectrum, self.out_dir))
        if self.dump_eigenfunctions and (path := report_writer.write_spectrum_nodal(spectrum, self.out_dir)):
            outcome.paths.append(path)
        if self.oracle_check:
            outcome.oracle = self._spectrum_oracle(spectrum)
            outcome.paths.append(self._write_oracle(outcome.oracle))
        outcome.paths.append(report_writer.write_metadata(self.config, "spectrum", self.out_dir))
        return outcome

    def sweep(self) -> RunOutcome:
        """ε-sweep to report.json and per-k CSVs, with acceptance verdicts."""
        results: list[ShellEigenResult] = []
        report = run_sweep(self.config.to_sweep_config(), self.threads, results_sink=results)
        outcome = RunOutcome(report=report)
        outcome.paths.extend(report_writer.write_sweep(report, self.out_dir))

        outcome.acceptance = evaluate_acceptance(report, self.config.acceptance)
        if outcome.acceptance:
            outcome.paths.append(report_writer.write_acceptance(outcome.acceptance, self.out_dir))
        if self.dump_eigenfunctions and results:
            outcome.paths.append(report_writer.write_shell_nodal(results[-1], self.out_dir))
        if self.oracle_check:
            outcome.oracle = self._shell_oracle(report.epsilons[0])
            outcome.paths.append(self._write_oracle(outcome.oracle))

        flux = [result.flux_jump for result in results if result.flux_jump is not None]
        extra = {"max_flux_jump": max(flux)} if flux else None
        outcome.paths.append(report_writer.write_metadata(self.config, "sweep", self.out_dir, extra))
        return outcome

    def diagnostics(self) -> RunOutcome:
        """Fourier tables to alpha_table.csv and tail_sums.csv with tail-sum order fits."""
        cfg = self.config.to_sweep_config().model_copy(update={"diagnostics": self.config.diagnostics})
        tables = run_diagnostics(cfg, self.threads)
        outcome = RunOutcome(tables=tables)
        flat = [table for k in sorted(tables) for table in tables[k]]
        outcome.paths.extend(report_writer.write_alpha_table(flat, self.out_dir))

        orders = {str(k): tail_sum_report(rows).model_dump() for k, rows in sorted(tables.items())}
        outcome.paths.append(report_writer.write_json(self.out_dir / "tail_orders.json", orders))
        outcome.paths.append(report_writer.write_metadata(self.config, "diagnostics", self.out_dir))
        return outcome

    def _spectrum_oracle(self, spectrum: Spectrum) -> list[OracleRow]:
        """Curve spectra against a mesh refined twice; sphere spectra are closed-form."""
        if spectrum.mesh is None:
            logger.info("Sphere spectrum is closed-form; oracle check skipped")
            return []
        fine = interface_spectrum(self.config.interface, spectrum.count, CurveMesh1D(2 * spectrum.mesh.nodes_count))
        return [
            OracleRow(label=f"k={k}", computed=spectrum.value(k), reference=fine.value(k), tolerance=REFINEMENT_REL_TOL)
            for k in range(1, spectrum.count + 1)
        ]

    def _shell_oracle(self, epsilon: float) -> list[OracleRow]:
        """Radial FEM eigenvalues against the shooting method at the largest ε (spheres only)."""
        interface = self.config.interface
        if isinstance(interface, CurveInterface):
            logger.info("Shooting oracle applies to spheres only; oracle check skipped")
            return []
        rows = []
        for l in range(ORACLE_DEGREES):
            problem = RadialProblem(
                n=interface.n, r=interface.r, angular=float(l * (l + interface.n - 2)), epsilon=epsilon,
                coefficients=self.config.coefficients,
                elements_per_side=self.config.mesh.radial_elements_per_side,
            )
            fem = solve_radial_mode(problem, ORACLE_DEGREES).values
            reference = shooting_oracle(problem, ORACLE_DEGREES)
            rows.extend(
                OracleRow(label=f"eps={epsilon:g} l={l} j={j}", computed=float(value), reference=ref,
                          tolerance=SHOOTING_REL_TOL)
                for j, (value, ref) in enumerate(zip(fem, reference, strict=True))
            )
        return rows

    def _write_oracle(self, rows: list[OracleRow]) -> Path:
        failed = [row for row in rows if not row.passed]
        if failed:
            logger.warning(f"{len(failed)} oracle rows exceed their relative tolerance")
        return report_writer.write_csv(
            self.out_dir / "oracle.csv",
            ["label", "computed", "reference", "rel_diff", "tolerance"],
            [[row.label, row.computed, row.reference, row.rel_diff, row.tolerance] for row in rows],
        )

    def epsilons(self) -> list[float]:
        """ε grid actually used after scaling to the reach."""
        return scaled_epsilons(self.config.to_sweep_config())
