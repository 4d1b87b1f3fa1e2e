"""Base exception shared by every CoughScreen module.

Each module defines its own subclasses next to the code that raises them;
the CLI and the scoring service only rely on this base and its ``code``.
"""

from __future__ import annotations


class CoughScreenError(Exception):
    """Raised for data-level failures (bad input files, bad checkpoints, bad shapes)."""

    @property
    def code(self) -> str:
        name = type(self).__name__
        return name.removesuffix("Error") or name
