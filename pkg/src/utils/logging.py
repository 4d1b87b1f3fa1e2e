"""Structured logging for CoughScreen — JSON to stderr, stdout stays for results."""

import logging
import sys
from typing import Any

import numpy as np
import structlog

from src.constants import PROJECT_NAME

# ndarrays larger than this are logged as a shape tag only
_MAX_INLINE_ARRAY = 16


def _coerce_numpy(_, __, event_dict: dict[str, Any]) -> dict[str, Any]:
    """Turn numpy scalars and small arrays into plain Python values."""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray):
            event_dict[key] = value.tolist() if value.size <= _MAX_INLINE_ARRAY else f"ndarray{value.shape}"
    return event_dict


def _tag_service(_, __, event_dict: dict[str, Any]) -> dict[str, Any]:
    event_dict.setdefault("service", PROJECT_NAME)
    return event_dict


def setup_logging(level: str = "INFO", json_format: bool = True) -> None:
    """
    Configure structured logging for CoughScreen.

    Output goes to stderr; command results such as ScoreResponse lines own
    stdout. Every event carries a timestamp, its level, the service name and
    whatever ``bind_command`` put in context.
    """
    renderer: structlog.types.Processor = (
        structlog.processors.JSONRenderer() if json_format else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            _tag_service,
            _coerce_numpy,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            logging.getLevelNamesMapping().get(level.upper(), logging.INFO)
        ),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def bind_command(command: str, **fields: Any) -> None:
    """Tag every following event in this context with the running command."""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(command=command, **fields)


def get_logger(name: str = "") -> structlog.BoundLogger:
    """A lazily configured logger bound to a component name."""
    return structlog.get_logger(component=name) if name else structlog.get_logger()
