"""Exception types raised across the package."""

from __future__ import annotations


class DgsolvError(Exception):
    """Base class for all package errors."""


class ParseError(DgsolvError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyMoleculeError(ParseError):
    pass


class TypingError(DgsolvError, KeyError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"unknown atom type label {label!r}")

    def __str__(self) -> str:
        return self.args[0]


class DuplicateEntryError(DgsolvError, ValueError):
    pass


class ConfigurationError(DgsolvError, ValueError):
    pass


class DomainError(DgsolvError, ValueError):
    """A point (atom, charge) lies outside the grid or on a singular node."""


class ConstraintViolation(DgsolvError, ValueError):
    """Parameters fall outside the stability region gamma >= gamma0, |p| <= beta*gamma."""


class InstabilityError(DgsolvError, FloatingPointError):
    pass


class NonConvergenceError(DgsolvError, RuntimeError):
    def __init__(self, message: str, **details):
        self.details = details
        super().__init__(message)
