"""Allow running as python -m cbdom."""

from cbdom.cli import cli

cli()
