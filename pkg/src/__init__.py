"""CoughScreen — two-stage cough-sound screening pipeline."""

__version__ = "0.1.0"
