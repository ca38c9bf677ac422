"""
Logging setup for the command-line process and its workers.

Logs go to stderr so stdout carries nothing but data tables.
"""

import logging
import sys
from typing import Any

import structlog

LOG_FORMATS = ("console", "json")


def _stderr_logger(*_args: Any) -> structlog.PrintLogger:
    # resolved per logger so a swapped sys.stderr (tests, workers) is honoured
    return structlog.PrintLogger(sys.stderr)


def configure_logging(level: str = "WARNING", fmt: str = "console") -> None:
    """
    Configure structlog for this process.

    Args:
        level: Minimum level name (DEBUG, INFO, WARNING, ERROR)
        fmt: "console" for key=value lines, "json" for one JSON object per line

    Raises:
        ValueError: On an unknown level or format
    """
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ValueError(f"unknown log level {level!r}")
    if fmt not in LOG_FORMATS:
        raise ValueError(f"log format must be one of {', '.join(LOG_FORMATS)}")
    renderer: Any = (
        structlog.processors.JSONRenderer()
        if fmt == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric),
        logger_factory=_stderr_logger,
        cache_logger_on_first_use=False,
    )
