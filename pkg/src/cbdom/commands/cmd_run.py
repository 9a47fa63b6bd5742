"""Run whichever experiment the config's ``command`` names."""

from __future__ import annotations

import importlib

import click

from cbdom.commands.resolve import emit, exit_codes, experiment_options, prepare

_EXECUTORS = {
    "characteristics": "cbdom.commands.cmd_characteristics",
    "dominate":        "cbdom.commands.cmd_dominate",
    "verify":          "cbdom.commands.cmd_verify",
    "sweep":           "cbdom.commands.cmd_sweep",
    "search":          "cbdom.commands.cmd_search",
    "selftest":        "cbdom.commands.cmd_selftest",
}


@click.command()
@experiment_options()
@click.pass_context
def run(ctx, config_path, out_dir, threads, seed, verbose):
    """Dispatch on the config's command field."""
    with exit_codes():
        cfg = prepare(config_path, seed, threads, verbose, out_dir)
        mod = importlib.import_module(_EXECUTORS[cfg.command])
        record, text = mod.execute(cfg, threads)
        emit(ctx, cfg, record, text)
