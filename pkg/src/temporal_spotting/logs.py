"""Logging setup for the command-line entry point.

Library modules only create loggers; handlers are installed here.
"""

import logging
import os
import sys

LOG_LEVEL_ENV = "TEMPORAL_SPOTTING_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | int | None = None) -> logging.Logger:
    """
    Install one stderr handler on the package logger.

    Args:
        level: Explicit level; falls back to ``TEMPORAL_SPOTTING_LOG_LEVEL``, then WARNING

    Returns:
        The package logger

    Raises:
        ValueError: If the level name is unknown
    """
    level = level if level is not None else os.environ.get(LOG_LEVEL_ENV, "WARNING")
    if isinstance(level, str):
        resolved = logging.getLevelName(level.upper())
        if not isinstance(resolved, int):
            raise ValueError(f"Unknown log level '{level}'")
        level = resolved

    logger = logging.getLogger("temporal_spotting")
    for handler in list(logger.handlers):
        if getattr(handler, "_temporal_spotting", False):
            logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._temporal_spotting = True  # type: ignore[attr-defined]
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
