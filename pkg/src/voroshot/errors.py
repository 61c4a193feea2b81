"""Exception hierarchy.

The CLI maps these onto exit codes: ``ConfigError`` -> 1, ``DataError`` -> 2,
``DomainError`` and ``TrainingError`` -> 3.
"""
from __future__ import annotations


class VoroshotError(Exception):
    pass


class ConfigError(VoroshotError):
    """Invalid run configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DataError(VoroshotError):
    pass


class BankFormatError(DataError):
    """Raised for malformed bank files; ``location`` is a line number or byte offset."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{message} (at {location})" if location else message)


class DomainError(VoroshotError, ValueError):
    """Numeric input outside the domain of an operation."""

    def __init__(self, message: str, stage: str | None = None):
        self.stage = stage
        super().__init__(f"{stage}: {message}" if stage else message)


class DimensionError(VoroshotError, ValueError):
    pass


class TrainingError(VoroshotError, ArithmeticError):
    pass
