"""CoughScreen CLI — command-line interface."""

from src.cli.commands import cli, cli_main

__all__ = ["cli", "cli_main"]
