"""Logging utilities."""

import logging
import sys

from common.settings import settings


def get_logger(name: str) -> logging.Logger:
    """Create and return a logger instance.

    Args:
        name: Logger name

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(settings.log_level)

    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setLevel(logging.DEBUG)
        formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


def set_level(level: str) -> None:
    """Change the level of every logger created through ``get_logger``.

    Args:
        level: Logging level name (e.g. "INFO")
    """
    settings.log_level = level
    for name in list(logging.root.manager.loggerDict):
        if name.split(".")[0] in {"numerics", "cli", "common"}:
            logging.getLogger(name).setLevel(level)
