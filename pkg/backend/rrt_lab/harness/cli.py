"""Command-line entry point: ``rrt-lab <experiment> [options]``.

Exit codes: 0 all checks passed, 1 a tolerance check failed, 2 usage,
configuration or output errors.
"""
import logging
from pathlib import Path
from typing import Optional

import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

from rrt_lab.errors import RrtLabError
from rrt_lab.harness.archive import archive_result
from rrt_lab.harness.config import EXPERIMENT_NAMES, THREADS_ENV_VAR, load_config
from rrt_lab.harness.experiments import run_experiment
from rrt_lab.harness.output import Summary, save_result
from rrt_lab.logging_config import configure_logging

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, help="Monte Carlo experiments on random recursive trees in random environments.")
console = Console()


def _print_summary(summary: Summary, paths: dict[str, Path]) -> None:
    table = Table(title=f"{summary.experiment}: {summary.theorem}", show_lines=False)
    table.add_column("check")
    table.add_column("value", justify="right")
    table.add_column("bounds", justify="right")
    table.add_column("result")
    for check in summary.checks:
        low = "-inf" if check.lower is None else f"{check.lower:.4g}"
        high = "inf" if check.upper is None else f"{check.upper:.4g}"
        table.add_row(
            check.name,
            f"{check.value:.6g}",
            f"[{low}, {high}]",
            "[green]pass[/green]" if check.passed else "[red]FAIL[/red]",
        )
    console.print(table)
    for kind, path in paths.items():
        console.print(f"💾 {kind}: {path}")


@app.command()
def run(
    experiment: str = typer.Argument(..., help=f"One of: {', '.join(EXPERIMENT_NAMES)}"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="TOML config file; flags override it."),
    n: Optional[int] = typer.Option(None, "--n", help="Tree size."),
    reps: Optional[int] = typer.Option(None, "--reps", help="Number of replicates."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Mandatory 64-bit seed (flag or config)."),
    threads: Optional[int] = typer.Option(None, "--threads", envvar=THREADS_ENV_VAR, help="Worker threads."),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory."),
    archive: Optional[Path] = typer.Option(None, "--archive", help="DuckDB file to append the run to."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging."),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Warnings only, no progress bars."),
):
    configure_logging(verbose=verbose, quiet=quiet)
    try:
        experiment_config = load_config(
            experiment,
            config,
            {"n": n, "reps": reps, "seed": seed, "threads": threads, "output": out},
        )
        table, summary = run_experiment(experiment_config, quiet=quiet)
        paths = save_result(table, summary, experiment_config.output)
        if archive is not None:
            archive_result(table, summary, archive)
    except RrtLabError as e:
        logger.error(f"❌ {e.detail}")
        console.print(f"[red]❌ {type(e).__name__}: {e.detail}[/red]")
        raise typer.Exit(code=e.exit_code)

    if not quiet:
        _print_summary(summary, paths)
    raise typer.Exit(code=0 if summary.passed else 1)


def main() -> None:
    load_dotenv()
    app()
