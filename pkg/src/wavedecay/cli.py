"""Command line entry point: wavedecay run | list | validate."""
from __future__ import annotations

import json
import sys

import click

from .config import KINDS, OUTPUT_ENV, load_config
from .errors import ConfigError
from .experiments import ExperimentFailure, run_experiment

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _kind_help() -> str:
    return "\n".join(f"  {k:<17} {v[1]}" for k, v in KINDS.items())


@click.group(
    help="Traveling-wave decay laboratory.\n\nExperiment kinds and what they check:\n\n\b\n" + _kind_help(),
    context_settings={"max_content_width": 100},
)
def main():
    pass


@main.command("list", help="List experiment kinds, the result each validates, and the config sections each reads.")
def list_cmd():
    click.echo(f"{'kind':<17} {'validates':<55} sections")
    for kind, (_desc, validates, sections) in KINDS.items():
        click.echo(f"{kind:<17} {validates:<55} {', '.join(sections)}")


@main.command(help="Parse and validate a config without running it.")
@click.argument("config_path", type=click.Path(dir_okay=False))
def validate(config_path):
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(f"ok: {cfg.kind} -> {cfg.output_dir()}")


@main.command(help=f"Run an experiment; artifacts go to <root>/<kind>-<hash>/ (root from --output-root, the config, ${OUTPUT_ENV}, or ./runs).")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--output-root", default=None, help="Directory under which the run directory is created.")
def run(config_path, output_root):
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        report, out = run_experiment(cfg, output_root)
    except ExperimentFailure as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(json.dumps(report["results"], indent=2, sort_keys=True, default=str))
    click.echo(f"verdict: {report['verdict']}")
    click.echo(f"artifacts: {out}")


if __name__ == "__main__":
    main()
