"""Shared option handling, config loading and exit codes for all cbdom commands."""

from __future__ import annotations

import logging
import sys
from contextlib import contextmanager
from pathlib import Path

import click

from cbdom.config.schema import ExperimentConfig, load_config
from cbdom.errors import ConfigError, DomainError, NumericalError
from cbdom.output.formatter import to_json, write_json
from cbdom.workers import set_threads

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def experiment_options(required: bool = True):
    """``--config/--out/--threads/--seed/--verbose``, shared by every command."""
    def decorate(fn):
        fn = click.option("--verbose", is_flag=True, help="Log progress at INFO level")(fn)
        fn = click.option("--seed", type=int, default=None,
                          help="Override the config seed")(fn)
        fn = click.option("--threads", type=int, default=None,
                          help="Worker threads (0 = auto; falls back to CBDOM_THREADS)")(fn)
        fn = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                          help="Directory for result files")(fn)
        fn = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                          required=required, help="Experiment config (JSON)")(fn)
        return fn
    return decorate


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def prepare(config_path: str | None, seed: int | None, threads: int | None, verbose: bool,
            out_dir: str | None, command: str | None = None) -> ExperimentConfig:
    """Load the config, apply CLI overrides and set up logging and threads.

    Without ``config_path`` the defaults for ``command`` are used.
    """
    configure_logging(verbose)
    if threads is not None and threads < 0:
        raise ConfigError("thread count must be nonnegative", field="--threads")
    set_threads(threads)
    if config_path is None:
        if command is None:
            raise ConfigError("no config given", field="--config")
        cfg = ExperimentConfig(command)
    else:
        cfg = load_config(config_path)
    cfg = cfg.with_overrides(seed=seed, output=out_dir)
    if command is not None and cfg.command != command:
        raise ConfigError(f"config is for {cfg.command!r}, not {command!r}", field="command")
    return cfg


@contextmanager
def exit_codes():
    """Map config errors to exit 2 and numerical/domain failures to exit 3."""
    try:
        yield
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        raise SystemExit(EXIT_CONFIG)
    except (NumericalError, DomainError) as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        raise SystemExit(EXIT_NUMERICAL)


def output_path(cfg: ExperimentConfig, name: str) -> Path | None:
    if not cfg.output:
        return None
    return Path(cfg.output) / name


def emit(ctx: click.Context, cfg: ExperimentConfig, record: dict, text: str) -> None:
    """Write ``<command>.json`` when an output directory is set and print the result.

    A record with ``passed: false`` ends the command with exit code 3.
    """
    path = output_path(cfg, f"{cfg.command}.json")
    if path is not None:
        write_json(path, record)
    json_mode = ctx.obj.get("json") if ctx.obj else False
    if json_mode:
        click.echo(to_json(record), nl=False)
    else:
        click.echo(text)
    if record.get("passed") is False:
        raise SystemExit(EXIT_NUMERICAL)
