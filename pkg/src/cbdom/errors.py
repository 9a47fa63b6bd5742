"""Exception hierarchy shared by every cbdom package."""

from __future__ import annotations


class CbdomError(Exception):
    """Base class for all errors raised by cbdom."""


class DomainError(CbdomError, ValueError):
    """An input violates a precondition of the requested operation."""


class NotPSDError(DomainError):
    """A matrix has an eigenvalue below the PSD tolerance."""


class NotInvertibleError(DomainError):
    """A weight cell is singular where invertibility is required."""


class PreconditionError(DomainError):
    """A parameter lies outside the range where a statement is claimed."""


class NumericalError(CbdomError):
    """A computation ran but could not certify its result."""


class CertificateError(NumericalError):
    """A John ellipsoid sandwich certificate failed."""


class EscalationError(NumericalError):
    """Threshold or scale doubling exceeded its cap."""


class ConvergenceError(NumericalError):
    """An iterative norm estimate did not converge.

    ``bracket`` holds the last two Rayleigh-quotient estimates.
    """

    def __init__(self, message: str, bracket: tuple[float, float] = (0.0, 0.0)):
        super().__init__(message)
        self.bracket = bracket


class ConfigError(CbdomError):
    """An experiment config violates the schema.

    ``field`` is a dotted path (``weights.W.p``); ``line``/``column`` are set
    for JSON syntax errors.
    """

    def __init__(self, message: str, field: str = "", line: int | None = None,
                 column: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line
        self.column = column

    def __str__(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}, column {self.column}")
        if self.field:
            where.append(f"field {self.field}")
        prefix = "; ".join(where)
        msg = super().__str__()
        return f"{prefix}: {msg}" if prefix else msg
