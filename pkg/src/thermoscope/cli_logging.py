"""Logging infrastructure for CLI output with verbosity levels.

This module provides a unified logging system that:
1. Keeps data (stdout or output files) apart from diagnostics (stderr)
2. Maps the THERMOSCOPE_LOG environment variable onto verbosity levels
3. Bridges records from the library's ``logging`` loggers into Rich output
"""

import logging
import os
from enum import IntEnum

from rich.console import Console

LOG_ENV_VAR = "THERMOSCOPE_LOG"
LIBRARY_LOGGER = "thermoscope"


class Verbosity(IntEnum):
    """Verbosity levels matching Python logging standard.

    Lower numeric values mean more verbose output.
    """

    TRACE = 5  # Per-iteration solver detail
    DEBUG = 10  # Solver progress, renormalization factors
    INFO = 20  # Progress messages (files written, sweep status)
    WARNING = 30  # Warnings + errors - DEFAULT
    ERROR = 40  # Only errors (quietest, for clean scripts)


_ENV_LEVELS = {
    "error": Verbosity.ERROR,
    "warn": Verbosity.WARNING,
    "warning": Verbosity.WARNING,
    "info": Verbosity.INFO,
    "debug": Verbosity.DEBUG,
    "trace": Verbosity.TRACE,
}


def verbosity_from_env(value: str | None = None) -> Verbosity:
    """Parse a THERMOSCOPE_LOG value; unknown or missing values mean WARNING."""
    raw = os.environ.get(LOG_ENV_VAR) if value is None else value
    if raw is None:
        return Verbosity.WARNING
    return _ENV_LEVELS.get(raw.strip().lower(), Verbosity.WARNING)


class CLILogger:
    """Centralized logger for CLI diagnostics with verbosity control.

    Diagnostics always go to stderr so stdout can carry CSV/JSON data.
    """

    def __init__(self, verbosity: Verbosity):
        self.verbosity = verbosity
        self.console = Console(stderr=True)

    def _emit(self, level: Verbosity, message: str, style: str) -> None:
        if self.verbosity <= level:
            self.console.print(message, style=style, markup=False, highlight=False)

    def trace(self, message: str) -> None:
        self._emit(Verbosity.TRACE, f"[TRACE] {message}", "dim magenta")

    def debug(self, message: str) -> None:
        self._emit(Verbosity.DEBUG, f"[DEBUG] {message}", "dim cyan")

    def info(self, message: str) -> None:
        self._emit(Verbosity.INFO, message, "dim")

    def warning(self, message: str) -> None:
        self._emit(Verbosity.WARNING, message, "yellow")

    def error(self, message: str) -> None:
        self._emit(Verbosity.ERROR, message, "red")

    def success(self, message: str) -> None:
        self._emit(Verbosity.INFO, message, "green")


class CLILogHandler(logging.Handler):
    """Forwards library log records to a :class:`CLILogger`."""

    def __init__(self, cli_logger: CLILogger):
        super().__init__(level=int(cli_logger.verbosity))
        self.cli_logger = cli_logger

    def emit(self, record: logging.LogRecord) -> None:
        try:
            message = self.format(record)
        except Exception:  # pragma: no cover - logging must never raise
            self.handleError(record)
            return
        if record.levelno >= logging.ERROR:
            self.cli_logger.error(message)
        elif record.levelno >= logging.WARNING:
            self.cli_logger.warning(message)
        elif record.levelno >= logging.INFO:
            self.cli_logger.info(message)
        elif record.levelno >= logging.DEBUG:
            self.cli_logger.debug(message)
        else:
            self.cli_logger.trace(message)


def attach_library_logging(cli_logger: CLILogger) -> CLILogHandler:
    """Route the ``thermoscope`` logger hierarchy to ``cli_logger``.

    Replaces any handler installed by a previous invocation in the same
    process.
    """
    library = logging.getLogger(LIBRARY_LOGGER)
    for handler in list(library.handlers):
        if isinstance(handler, CLILogHandler):
            library.removeHandler(handler)
    handler = CLILogHandler(cli_logger)
    library.addHandler(handler)
    library.setLevel(int(cli_logger.verbosity))
    library.propagate = False
    return handler
