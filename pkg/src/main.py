"""
CoughScreen — Main entry point.

Usage:
    python -m src.main routes     # Same as `coughscreen routes`
    coughscreen cv --manifest data/manifest.csv
"""

from __future__ import annotations

from src.cli.commands import main

if __name__ == "__main__":
    main()
