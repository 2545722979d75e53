"""Exception types shared across the package."""

from __future__ import annotations


class QocError(Exception):
    """Base class for all package-specific errors."""


class DomainError(QocError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InfeasibleAccuracyError(DomainError):
    """A minimum-accuracy target at or above the category ceiling gamma."""


class InfeasibleProblemError(QocError):
    """Constraint translation produced lower bounds that exceed the budget."""

    def __init__(self, message: str, vehicle: int | None = None):
        super().__init__(message)
        self.vehicle = vehicle


class ConvergenceError(QocError):
    """The iterative solver hit its iteration cap; carries the best iterate."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(QocError, ValueError):
    """A scenario configuration file or override is malformed."""
