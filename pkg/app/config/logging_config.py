"""Central logging configuration for the transfer simulator.

Provides a single function, :func:`configure_logging`, that applies a
stream-based handler and a consistent formatter to the ``pst`` logger.
Importing this module will configure logging once. The function is
idempotent and safe to call multiple times; a later call may still change
the level.
"""
import logging
import sys

from .settings import LOG_LEVEL


def configure_logging(level: int | str | None = None) -> None:
    root_logger = logging.getLogger("pst")
    if level is None:
        level = LOG_LEVEL
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    root_logger.setLevel(level)
    if root_logger.handlers:
        return

    handler = logging.StreamHandler(sys.stderr)
    formatter = logging.Formatter(
        "%(asctime)s %(levelname)s [%(name)s] %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
    )
    handler.setFormatter(formatter)
    root_logger.addHandler(handler)


# Configure at import time so every core module gets the same handler
configure_logging()
