"""CoughScreen utilities — structured logging."""

from src.utils.logging import bind_command, get_logger, setup_logging

__all__ = ["bind_command", "get_logger", "setup_logging"]
