"""Main CLI entry point for the shell eigenvalue lab."""

from collections.abc import Callable
from typing import Any, TypeVar

import click

from cli.config_loader import load_experiment
from cli.formatters import (
    print_acceptance_table,
    print_config_summary,
    print_error,
    print_fit_summary,
    print_info,
    print_spectrum_table,
    print_success,
    print_tail_table,
    print_warning,
)
from cli.runner import RunOutcome, ScenarioRunner
from common.errors import ShellLabError
from common.logger import set_level

EXIT_THRESHOLD_VIOLATION = 2

F = TypeVar("F", bound=Callable[..., Any])


def run_options(func: F) -> F:
    """Options shared by the commands that run numerics."""
    options = [
        click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                     help="Experiment config (YAML)"),
        click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
                     help="Output directory (default: output.directory/scenario)"),
        click.option("--threads", default=None, type=click.IntRange(min=1), help="Worker threads for ε solves"),
        click.option("--dump-eigenfunctions/--no-dump-eigenfunctions", default=None,
                     help="Write nodal eigenfunction tables"),
        click.option("--oracle-check/--no-oracle-check", default=None,
                     help="Cross-check against an independent solver"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _runner(
    config_path: str, out_dir: str | None, threads: int | None, dump_eigenfunctions: bool | None,
    oracle_check: bool | None,
) -> ScenarioRunner:
    config = load_experiment(config_path)
    return ScenarioRunner(
        config, out_dir=out_dir, threads=threads, dump_eigenfunctions=dump_eigenfunctions, oracle_check=oracle_check
    )


def _report_oracle(outcome: RunOutcome) -> None:
    if not outcome.oracle:
        return
    worst = max(row.rel_diff for row in outcome.oracle)
    failed = sum(not row.passed for row in outcome.oracle)
    if not failed:
        print_success(f"Oracle check: {len(outcome.oracle)} values agree (max rel. diff {worst:.2e})")
    else:
        print_warning(f"Oracle check: {failed} of {len(outcome.oracle)} values outside tolerance (max rel. diff {worst:.2e})")


def _finish(ctx: click.Context, outcome: RunOutcome, label: str) -> None:
    for path in outcome.paths:
        print_info(f"wrote {path}")
    if outcome.passed:
        print_success(f"{label} completed")
        return
    print_error(f"{label} completed with violated thresholds")
    ctx.exit(EXIT_THRESHOLD_VIOLATION)


@click.group()
@click.version_option(version="0.1.0")
@click.option("--verbose", is_flag=True, help="Log progress of the numerics (INFO level)")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """Shell Lab - thin-shell two-phase eigenvalue experiments."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    if verbose:
        set_level("INFO")


@cli.command()
@run_options
@click.pass_context
def spectrum(
    ctx: click.Context, config_path: str, out_dir: str | None, threads: int | None,
    dump_eigenfunctions: bool | None, oracle_check: bool | None,
) -> None:
    """Compute the interface spectrum and write spectrum.csv."""
    try:
        runner = _runner(config_path, out_dir, threads, dump_eigenfunctions, oracle_check)
        outcome = runner.spectrum()
        assert outcome.spectrum is not None
        print_spectrum_table(outcome.spectrum)
        _report_oracle(outcome)
    except (ShellLabError, OSError) as e:
        print_error(f"Spectrum failed: {e}")
        raise click.Abort() from e
    _finish(ctx, outcome, "Spectrum")


@cli.command()
@run_options
@click.pass_context
def sweep(
    ctx: click.Context, config_path: str, out_dir: str | None, threads: int | None,
    dump_eigenfunctions: bool | None, oracle_check: bool | None,
) -> None:
    """Run the ε-sweep, fit λ_{k,ε} and check the acceptance thresholds.

    Exits with status 2 when a threshold of the config is violated.
    """
    try:
        runner = _runner(config_path, out_dir, threads, dump_eigenfunctions, oracle_check)
        outcome = runner.sweep()
        assert outcome.report is not None
        print_fit_summary(outcome.report)
        if outcome.acceptance:
            print_acceptance_table(outcome.acceptance)
        _report_oracle(outcome)
    except (ShellLabError, OSError) as e:
        print_error(f"Sweep failed: {e}")
        raise click.Abort() from e
    _finish(ctx, outcome, "Sweep")


@cli.command()
@run_options
@click.pass_context
def diagnostics(
    ctx: click.Context, config_path: str, out_dir: str | None, threads: int | None,
    dump_eigenfunctions: bool | None, oracle_check: bool | None,
) -> None:
    """Write Fourier coefficient tables and tail sums of shell eigenfunctions."""
    try:
        runner = _runner(config_path, out_dir, threads, dump_eigenfunctions, oracle_check)
        outcome = runner.diagnostics()
        print_tail_table(outcome.tables)
    except (ShellLabError, OSError) as e:
        print_error(f"Diagnostics failed: {e}")
        raise click.Abort() from e
    _finish(ctx, outcome, "Diagnostics")


@cli.command("validate-config")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Experiment config (YAML)")
def validate_config(config_path: str) -> None:
    """Parse and validate an experiment config."""
    try:
        runner = ScenarioRunner(load_experiment(config_path))
        print_config_summary(runner.config, runner.epsilons())
    except (ShellLabError, OSError) as e:
        print_error(f"Invalid config: {e}")
        raise click.Abort() from e
    print_success(f"{config_path} is valid")


def main() -> None:
    """Entry point for CLI."""
    cli()


if __name__ == "__main__":
    main()
