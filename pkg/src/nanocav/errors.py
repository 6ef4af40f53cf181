"""Exception hierarchy.

Two roots map onto CLI exit codes: ``ValidationError`` (bad input, exit 2)
and ``NumericalError`` (a computation that could not finish, exit 3).
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Input outside the domain of an operation."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a result."""


class DomainError(ValidationError):
    """Wavelength outside the validity window of a dispersion model."""


class ParameterError(ValidationError):
    pass


class DivergentFinesseError(ValidationError):
    """T_c * sqrt(R1 R2) >= 1: the round trip has no loss."""


class InfiniteAreaError(ValidationError):
    """Dipole orthogonal to the local field; the coupling vanishes."""


class WindowError(ValidationError):
    pass


class DegenerateBaselineError(ValidationError):
    pass


class NoCavityError(ValidationError):
    """Mirror reflection bands do not overlap."""


class FormatError(ValidationError):
    """Malformed scan, config or measurement file."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class NotFoundError(NumericalError):
    """Root search found no sign change in its bracket."""


class ModeNotGuidedError(NumericalError):
    pass


class InfeasibleMeasurementError(NumericalError):
    """No (R, T_c) in (0, 1]^2 reproduces the measured values."""


class FitFailure(NumericalError):
    """Least-squares fit did not converge.

    Carries the last parameter vector and the residual-norm history so the
    caller can inspect where the iteration stalled.
    """

    def __init__(self, message: str, last_params=None, history=None):
        super().__init__(message)
        self.last_params = last_params
        self.history = list(history) if history is not None else []
