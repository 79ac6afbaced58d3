"""Structured logging configuration using structlog.

Events go through two named loggers, ``ffa_ratings.ingest`` (skipped rows,
repaired ties, synthetic generation) and ``ffa_ratings.replay`` (per-system
progress, timings, undersized cohorts, skipped bins). Console output is
human-readable by default; ``log_file`` adds a JSON-lines run log that holds
only those two loggers, so a run's counters can be analysed afterwards.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import structlog

PACKAGE_LOGGER = "ffa_ratings"
COMPONENTS = ("ingest", "replay")


def get_logger(component: str) -> structlog.stdlib.BoundLogger:
    """Logger named ``ffa_ratings.<component>``."""
    if component not in COMPONENTS:
        raise ValueError(f"unknown log component {component!r}, expected one of {COMPONENTS}")
    return structlog.get_logger(f"{PACKAGE_LOGGER}.{component}")


def _reset_run_log() -> logging.Logger:
    package = logging.getLogger(PACKAGE_LOGGER)
    for handler in list(package.handlers):
        package.removeHandler(handler)
        handler.close()
    return package


def configure_logging(
    *,
    level: str = "INFO",
    log_file: Path | None = None,
    json_format: bool = False,
) -> None:
    """Configure structured logging for a CLI run.

    Args:
        level: Log level name (DEBUG, INFO, WARNING, ERROR).
        log_file: Optional path for the JSON-lines run log.
        json_format: If True, render console output as JSON too.

    Calling this again replaces the previous handlers.
    """
    log_level = getattr(logging, level.upper(), logging.INFO)

    shared_processors: list[structlog.types.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.StackInfoRenderer(),
    ]
    structlog.configure(
        processors=[
            *shared_processors,
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    def formatter(renderer: structlog.types.Processor) -> logging.Formatter:
        return structlog.stdlib.ProcessorFormatter(
            processors=[structlog.stdlib.ProcessorFormatter.remove_processors_meta, renderer],
        )

    # stderr keeps stdout free for the summary table
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(
        formatter(
            structlog.processors.JSONRenderer()
            if json_format
            else structlog.dev.ConsoleRenderer(pad_level=False)
        )
    )
    root = logging.getLogger()
    root.handlers.clear()
    root.addHandler(console_handler)
    root.setLevel(log_level)

    package = _reset_run_log()
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(str(log_file))
        file_handler.setFormatter(formatter(structlog.processors.JSONRenderer()))
        file_handler.setLevel(log_level)
        package.addHandler(file_handler)
