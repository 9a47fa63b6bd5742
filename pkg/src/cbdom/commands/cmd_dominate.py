"""Run the convex body sparse domination of the configured operator."""

from __future__ import annotations

import click

from cbdom.commands.resolve import emit, exit_codes, experiment_options, output_path, prepare
from cbdom.config.builders import build_function, build_lattice, build_operator, shift_pieces
from cbdom.config.schema import ExperimentConfig
from cbdom.domination.engine import DominationResult, dominate_cz, dominate_shift
from cbdom.domination.verify import residual_histogram
from cbdom.dyadic.functions import GridFunction
from cbdom.errors import ConfigError
from cbdom.operators.base import Operator
from cbdom.operators.cz import CZKernel
from cbdom.output.formatter import format_table, write_csv


def run_domination(cfg: ExperimentConfig, T: Operator, f: GridFunction,
                   threads: int | None = None) -> list[tuple[Operator, DominationResult]]:
    """Dominate ``T f``: one run per separated piece of a shift, one run for a kernel."""
    tol = cfg.tolerances.membership
    net_size = cfg.nets.size(cfg.vector_dim)
    if isinstance(T, CZKernel):
        if cfg.function.support != "middle":
            raise ConfigError("kernel domination needs a function supported in the middle half",
                              field="function.support")
        return [(T, dominate_cz(T, f, cfg.epsilon, tol=tol, net_size=net_size,
                                threads=threads))]
    return [(P, dominate_shift(P, f, cfg.epsilon, tol=tol, net_size=net_size,
                               threads=threads))
            for P in shift_pieces(T)]


def histogram_table(results: list[DominationResult]) -> list[list]:
    rows = []
    for i, res in enumerate(results):
        for b in residual_histogram(res.residual):
            rows.append([i, b["log10_bin"], b["count"]])
    return rows


def summary_rows(results: list[DominationResult]) -> list[list]:
    return [[i, len(r.family), r.constant, r.achieved_eps, r.max_residual, r.verified]
            for i, r in enumerate(results)]


SUMMARY_HEADERS = ["piece", "cubes", "constant", "eps", "max_residual", "verified"]


def execute(cfg: ExperimentConfig, threads: int | None = None) -> tuple[dict, str]:
    lattice = build_lattice(cfg)
    T = build_operator(cfg, lattice)
    f = build_function(cfg, lattice)
    results = [res for _, res in run_domination(cfg, T, f, threads)]
    record = {
        "config": {"dimension": cfg.dimension, "level": cfg.level,
                   "vector_dim": cfg.vector_dim, "epsilon": cfg.epsilon, "seed": cfg.seed,
                   "operator": cfg.operator.kind, "complexity": cfg.operator.complexity},
        "pieces": [r.to_dict() for r in results],
        "constant_sum": sum(r.constant for r in results),
        "passed": all(r.verified for r in results),
    }
    path = output_path(cfg, "residual_histogram.csv")
    if path is not None:
        write_csv(path, ["piece", "log10_bin", "count"], histogram_table(results))
    return record, format_table(SUMMARY_HEADERS, summary_rows(results))


@click.command()
@experiment_options()
@click.pass_context
def dominate(ctx, config_path, out_dir, threads, seed, verbose):
    """Sparse-dominate T f and write the family, constants and residual histogram."""
    with exit_codes():
        cfg = prepare(config_path, seed, threads, verbose, out_dir, "dominate")
        record, text = execute(cfg, threads)
        emit(ctx, cfg, record, text)
