"""Command-line entry points."""

from __future__ import annotations

import json
import sys

import click

from ..errors import FedmeldError, InvalidConfigError
from .config import load_config
from .experiment import run_experiment
from .report import compare_report


def _fail(exc: FedmeldError) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    violations = getattr(exc, "violations", None)
    if violations:
        payload["violations"] = list(violations)
    click.echo(json.dumps(payload), err=True)
    sys.exit(2)


@click.group()
def main() -> None:
    """Simulate federated learning over a satellite service ring."""


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Run only this seed.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for metrics and reports.")
def run(config: str, seed: int | None, out_dir: str | None) -> None:
    """Execute the configured scheme and write metrics CSVs."""
    try:
        report = run_experiment(load_config(config), out_dir, seed=seed)
    except FedmeldError as exc:
        _fail(exc)
        return
    for path in report["metrics_files"]:
        click.echo(path)
    click.echo(report["report_file"])


@main.command(name="solve-scmr")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Seed for data-dependent constants.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Also write the report as JSON into this directory.")
def solve_scmr_command(config: str, seed: int | None, out_dir: str | None) -> None:
    """Print the staleness/mixing solution (delta*, alpha*, bound) as JSON."""
    from ..engine import solve_from_config

    try:
        report = solve_from_config(load_config(config), seed=seed)
    except FedmeldError as exc:
        _fail(exc)
        return
    text = json.dumps(report, indent=2, sort_keys=True)
    click.echo(text)
    if out_dir:
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "scmr_report.json").write_text(text + "\n")


@main.command()
@click.argument("metrics", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", type=float, default=None,
              help="Loss threshold for the time-to-threshold column.")
def compare(metrics: tuple[str, ...], threshold: float | None) -> None:
    """Summarize one or more metrics CSVs side by side."""
    try:
        click.echo(compare_report(list(metrics), threshold))
    except FedmeldError as exc:
        _fail(exc)


if __name__ == "__main__":  # pragma: no cover - module execution convenience
    main()
