"""Exception hierarchy shared by the core modules, the CLI and the API."""
from __future__ import annotations


class PSTError(Exception):
    """Base class for every error raised on purpose by this package."""


class ConfigError(PSTError):
    """A network or recipe document could not be read or parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        super().__init__(message)


class NetworkValidationError(PSTError, ValueError):
    """The network violates one of its invariants."""


class BasisMismatchError(PSTError, ValueError):
    pass


class DegenerateShiftError(PSTError, ValueError):
    """The pair has no shift difference, so no free period can address it."""

    def __init__(self, pair: tuple[int, int], labels: tuple[str, str] | None = None):
        self.pair = pair
        names = labels if labels is not None else pair
        super().__init__(f"sites {names[0]} and {names[1]} have equal shifts")


class ScheduleError(PSTError, ValueError):
    pass
