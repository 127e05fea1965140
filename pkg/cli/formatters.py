"""Output formatters for experiment results."""

from collections.abc import Sequence
from typing import Any

from rich.console import Console
from rich.table import Table

from common.schemas import AcceptanceOutcome, ExperimentConfig, SweepReport
from numerics.fourier_diagnostics import FourierTable
from numerics.interface_spectrum import Spectrum

console = Console()


def _num(value: float | None, digits: int = 10) -> str:
    return "-" if value is None else f"{value:.{digits}g}"


def print_table_from_dict(data: dict[str, Any], title: str = "Results") -> None:
    """Print dictionary data as a table.

    Args:
        data: Dictionary to display
        title: Table title
    """
    table = Table(title=title, show_header=True, header_style="bold magenta")
    table.add_column("Key", style="cyan")
    table.add_column("Value", style="green")

    for key, value in data.items():
        table.add_row(str(key), str(value))

    console.print(table)


def print_config_summary(config: ExperimentConfig, epsilons: Sequence[float]) -> None:
    """Print the validated experiment config.

    Args:
        config: Validated experiment config
        epsilons: ε grid after scaling to the reach
    """
    interface = config.interface
    if interface.kind == "sphere":
        shape = f"sphere n={interface.n}, r={interface.r:g}"
    else:
        shape = f"curve with {len(interface.coefficients) - 1} harmonics"
    print_table_from_dict(
        {
            "scenario": config.scenario,
            "interface": shape,
            "σ₋ / σ₊": f"{config.coefficients.sigma_minus:g} / {config.coefficients.sigma_plus:g}",
            "k": ", ".join(str(k) for k in config.k),
            "ε grid": ", ".join(f"{eps:.4g}" for eps in epsilons),
            "fit degree": config.fit.degree,
            "acceptance checks": len(config.acceptance),
            "output": config.output.directory,
        },
        title="Experiment Config",
    )


def print_spectrum_table(spectrum: Spectrum) -> None:
    """Print (k, λ_k, cluster) rows."""
    table = Table(title="Interface Spectrum", show_header=True, header_style="bold magenta")
    table.add_column("k", style="cyan", justify="right")
    table.add_column("λ_k", style="green", justify="right")
    table.add_column("cluster", justify="right")

    for k, value, cluster in spectrum.to_rows():
        table.add_row(str(k), _num(value, 12), str(cluster))

    console.print(table)


def print_fit_summary(report: SweepReport) -> None:
    """Print fitted (a, b) next to the predicted leading term and slope for every k."""
    table = Table(title="ε-Sweep Fits", show_header=True, header_style="bold magenta")
    table.add_column("k", style="cyan", justify="right")
    table.add_column("a (fit)", style="green", justify="right")
    table.add_column("a (pred)", justify="right")
    table.add_column("b (fit)", style="green", justify="right")
    table.add_column("b (pred)", justify="right")
    table.add_column("source")
    table.add_column("remainder order", justify="right")

    for fit in report.fits:
        prediction = fit.prediction
        predicted_slope = prediction.slope if prediction.slope is not None else fit.split_slope
        source = prediction.slope_source + (" (split)" if prediction.slope is None and fit.split_slope is not None else "")
        table.add_row(
            str(fit.k),
            _num(fit.intercept),
            _num(prediction.leading),
            _num(fit.slope, 6),
            _num(predicted_slope, 6),
            source,
            "exact" if fit.remainder_order is None else f"{fit.remainder_order:.3f}",
        )

    console.print(table)


def print_acceptance_table(outcomes: Sequence[AcceptanceOutcome]) -> None:
    """Print acceptance verdicts with color-coded status."""
    table = Table(title="Acceptance", show_header=True, header_style="bold magenta")
    table.add_column("Check", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Expected")
    table.add_column("Status")

    for outcome in outcomes:
        status_display = "[green]pass[/green]" if outcome.passed else "[red]fail[/red]"
        table.add_row(outcome.name, _num(outcome.value, 8), outcome.expected, status_display)

    console.print(table)


def print_tail_table(tables: dict[int, list[FourierTable]]) -> None:
    """Print Fourier tail sums per (k, ε)."""
    table = Table(title="Fourier Tail Sums", show_header=True, header_style="bold magenta")
    table.add_column("k", style="cyan", justify="right")
    table.add_column("ε", justify="right")
    table.add_column("Σ_{l≥2} α²", justify="right")
    table.add_column("Σ_p α^{p,1}²", justify="right")
    table.add_column("cluster mass", justify="right")

    for k in sorted(tables):
        for row in tables[k]:
            table.add_row(
                str(k),
                f"{row.epsilon:.4g}",
                f"{row.transverse_tail:.3e}",
                f"{row.longitudinal_mass:.12f}",
                f"{row.cluster_mass:.12f}",
            )

    console.print(table)


def print_error(message: str) -> None:
    """Print error message.

    Args:
        message: Error message to display
    """
    console.print(f"✗ [red]{message}[/red]")


def print_success(message: str) -> None:
    """Print success message.

    Args:
        message: Success message to display
    """
    console.print(f"✓ [green]{message}[/green]")


def print_warning(message: str) -> None:
    """Print warning message.

    Args:
        message: Warning message to display
    """
    console.print(f"⚠ [yellow]{message}[/yellow]")


def print_info(message: str) -> None:
    """Print info message.

    Args:
        message: Info message to display
    """
    console.print(f"ℹ [blue]{message}[/blue]")
