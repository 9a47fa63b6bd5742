"""Exploratory search for rotating weights with a large norm-to-A2 ratio."""

from __future__ import annotations

import click

from cbdom.commands.resolve import emit, exit_codes, experiment_options, prepare
from cbdom.config.builders import build_lattice, build_operator
from cbdom.config.schema import ExperimentConfig
from cbdom.errors import ConfigError
from cbdom.estimates.probes import counterexample_search
from cbdom.output.formatter import format_table


def execute(cfg: ExperimentConfig, threads: int | None = None) -> tuple[dict, str]:
    if cfg.vector_dim != 2:
        raise ConfigError("the rotating-weight search runs with vector_dim 2",
                          field="vector_dim")
    lattice = build_lattice(cfg)
    T = build_operator(cfg, lattice)
    result = counterexample_search(lattice, cfg.search.alpha, cfg.search.budget,
                                   seed=cfg.seed, T=T, tol=cfg.tolerances.norm,
                                   threads=threads)
    record = {"config": {"dimension": cfg.dimension, "level": cfg.level,
                         "operator": cfg.operator.kind},
              **result.to_dict()}
    rows = [[k, v] for k, v in sorted(result.params.items())]
    rows += [["a2", result.a2], ["norm", result.norm], ["ratio", result.best_ratio],
             ["evaluations", result.evaluations]]
    return record, format_table(["field", "value"], rows)


@click.command()
@experiment_options()
@click.pass_context
def search(ctx, config_path, out_dir, threads, seed, verbose):
    """Search rotating weights maximizing |W^1/2 T W^-1/2| / [W]_A2^alpha."""
    with exit_codes():
        cfg = prepare(config_path, seed, threads, verbose, out_dir, "search")
        record, text = execute(cfg, threads)
        emit(ctx, cfg, record, text)
