"""Power-weight sweep over the simple chain: norm growth against [w]_A2."""

from __future__ import annotations

import click

from cbdom.commands.resolve import emit, exit_codes, experiment_options, output_path, prepare
from cbdom.config.builders import build_lattice
from cbdom.config.schema import ExperimentConfig
from cbdom.estimates.probes import power_weight_probe
from cbdom.output.formatter import format_table, write_csv

HEADERS = ["p", "a2", "norm", "ratio", "slope", "grid_a2", "grid_norm"]


def execute(cfg: ExperimentConfig, threads: int | None = None) -> tuple[dict, str]:
    lattice = build_lattice(cfg)
    result = power_weight_probe(lattice, cfg.sweep.p_grid, depth=cfg.sweep.depth,
                                tol=cfg.tolerances.norm, threads=threads)
    rows = [[r[h] for h in HEADERS] for r in result.rows]
    path = output_path(cfg, "sweep.csv")
    if path is not None:
        write_csv(path, HEADERS, rows)
    record = {"config": {"dimension": cfg.dimension, "level": cfg.level},
              **result.to_dict()}
    text = format_table(HEADERS, rows)
    text += f"\nslope {result.slope!r} (target {result.within_target})"
    text += f"\ngrid slope {result.grid_slope!r} at level {lattice.max_level}"
    return record, text


@click.command()
@experiment_options()
@click.pass_context
def sweep(ctx, config_path, out_dir, threads, seed, verbose):
    """Sweep power weights |x|^p and fit the log-log slope of the norm."""
    with exit_codes():
        cfg = prepare(config_path, seed, threads, verbose, out_dir, "sweep")
        record, text = execute(cfg, threads)
        emit(ctx, cfg, record, text)
