"""Click CLI entry point with lazy-loaded subcommands."""

from __future__ import annotations

import click


# Lazy-loading command group: imports command modules only when invoked.
# This keeps scipy.optimize and networkx off the path of --help and --version.
_COMMANDS = {
    "run":             ("cbdom.commands.cmd_run",             "run"),
    "characteristics": ("cbdom.commands.cmd_characteristics", "characteristics"),
    "dominate":        ("cbdom.commands.cmd_dominate",        "dominate"),
    "verify":          ("cbdom.commands.cmd_verify",          "verify"),
    "sweep":           ("cbdom.commands.cmd_sweep",           "sweep"),
    "search":          ("cbdom.commands.cmd_search",          "search"),
    "selftest":        ("cbdom.commands.cmd_selftest",        "selftest"),
}


class LazyGroup(click.Group):
    """A Click group that lazy-loads command modules on first access."""

    def list_commands(self, ctx):
        return sorted(_COMMANDS.keys())

    def get_command(self, ctx, cmd_name):
        if cmd_name not in _COMMANDS:
            return None
        module_path, attr_name = _COMMANDS[cmd_name]
        import importlib
        mod = importlib.import_module(module_path)
        return getattr(mod, attr_name)


@click.group(cls=LazyGroup)
@click.version_option(package_name="cbdom")
@click.option('--json', 'json_mode', is_flag=True, help='Print the result record as JSON')
@click.pass_context
def cli(ctx, json_mode):
    """cbdom: convex body sparse domination experiments."""
    ctx.ensure_object(dict)
    ctx.obj['json'] = json_mode
