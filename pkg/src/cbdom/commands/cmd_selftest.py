"""Run the built-in invariant suite."""

from __future__ import annotations

import click

from cbdom.commands.resolve import emit, exit_codes, experiment_options, prepare
from cbdom.config.schema import ExperimentConfig
from cbdom.output.formatter import format_table
from cbdom.selftest import run_checks


def execute(cfg: ExperimentConfig, threads: int | None = None,
            names: list[str] | None = None) -> tuple[dict, str]:
    checks = run_checks(names)
    record = {
        "checks": [c.to_dict() for c in checks],
        "failed": [c.name for c in checks if not c.passed],
        "passed": all(c.passed for c in checks),
    }
    rows = [[c.name, "ok" if c.passed else "FAILED", c.detail] for c in checks]
    text = format_table(["check", "status", "detail"], rows)
    text += f"\n{sum(c.passed for c in checks)}/{len(checks)} checks passed"
    return record, text


@click.command()
@experiment_options(required=False)
@click.option("--check", "names", multiple=True, help="Run only the named checks")
@click.pass_context
def selftest(ctx, config_path, out_dir, threads, seed, verbose, names):
    """Run the invariant suite; exit 3 if any check fails."""
    with exit_codes():
        cfg = prepare(config_path, seed, threads, verbose, out_dir, "selftest")
        record, text = execute(cfg, threads, list(names) or None)
        emit(ctx, cfg, record, text)
