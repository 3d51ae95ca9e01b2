"""Exception hierarchy shared by every regimelens module."""

from __future__ import annotations


class RegimeLensError(Exception):
    """Base class for all errors raised by regimelens."""


class ParseError(RegimeLensError):
    """Malformed CSV input. ``line`` is the 1-based line number, if known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ParseError):
    """Header is missing a required column or has unexpected ones."""


class DuplicateDateError(ParseError):
    pass


class ValidationError(RegimeLensError):
    pass


class InsufficientDataError(RegimeLensError):
    pass


class SingularMatrixError(RegimeLensError):
    """Design matrix is rank deficient; ``column`` names the offending term."""

    def __init__(self, message: str, column: object = None):
        self.column = column
        super().__init__(message)


class DegenerateFitError(RegimeLensError):
    pass


class DomainError(RegimeLensError, ValueError):
    pass


class ConfigError(RegimeLensError):
    pass
