"""Compute the Muckenhoupt characteristics of the configured weights."""

from __future__ import annotations

import click

from cbdom.commands.resolve import emit, exit_codes, experiment_options, prepare
from cbdom.config.builders import build_lattice, build_weights
from cbdom.config.schema import ExperimentConfig
from cbdom.geometry.nets import direction_net
from cbdom.output.formatter import format_cell, format_table
from cbdom.weights.characteristics import (
    a2_matrix,
    a2_scalar,
    a2_two_weight,
    a_infty_scalar,
    a_infty_scalar_matrix,
    reverse_holder_check,
)
from cbdom.weights.matrix_weight import MatrixWeight


def weight_characteristics(W: MatrixWeight, net, threads: int | None) -> dict:
    out = {}
    if W.invertible:
        out["a2_matrix"] = a2_matrix(W).to_dict()
    out["a_infty_scalar_matrix"] = a_infty_scalar_matrix(W, net=net, threads=threads).to_dict()
    if W.d == 1:
        if W.invertible:
            out["a2_scalar"] = a2_scalar(W).to_dict()
        a_inf = a_infty_scalar(W)
        out["a_infty_scalar"] = a_inf.to_dict()
        delta = 2.0 ** (-W.lattice.dim - 1) / a_inf.value
        rh = reverse_holder_check(W, delta)
        out["reverse_holder"] = {"delta": rh.delta, "worst_ratio": rh.worst_ratio,
                                 "holds": rh.holds}
    return out


def execute(cfg: ExperimentConfig, threads: int | None = None) -> tuple[dict, str]:
    lattice = build_lattice(cfg)
    W, V = build_weights(cfg, lattice)
    d = cfg.vector_dim
    net = direction_net(d, cfg.nets.size(d)) if d > 1 else None
    record = {"config": {"dimension": cfg.dimension, "level": cfg.level, "vector_dim": d,
                         "seed": cfg.seed},
              "W": {"spec": cfg.weights["W"].to_dict(),
                    **weight_characteristics(W, net, threads)}}
    if V is not None:
        record["V"] = {"spec": cfg.weights["V"].to_dict(),
                       **weight_characteristics(V, net, threads)}
        record["a2_two_weight"] = a2_two_weight(W, V).to_dict()

    rows = []
    for name in ("W", "V"):
        for key, rep in record.get(name, {}).items():
            if isinstance(rep, dict) and "value" in rep:
                rows.append([name, key, format_cell(rep["value"]),
                             "lower bound" if rep.get("lower_bound") else ""])
    if "a2_two_weight" in record:
        rows.append(["W,V", "a2_two_weight", format_cell(record["a2_two_weight"]["value"]), ""])
    return record, format_table(["weight", "characteristic", "value", "note"], rows)


@click.command()
@experiment_options()
@click.pass_context
def characteristics(ctx, config_path, out_dir, threads, seed, verbose):
    """Compute A2, A-infinity and reverse Hoelder data for the weights."""
    with exit_codes():
        cfg = prepare(config_path, seed, threads, verbose, out_dir, "characteristics")
        record, text = execute(cfg, threads)
        emit(ctx, cfg, record, text)
