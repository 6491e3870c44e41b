"""Exception types raised across the package."""

from __future__ import annotations


class DimensionMismatchError(ValueError):
    """Operands have incompatible matrix dimensions."""


class InvalidInputError(ValueError):
    """Input contains non-finite entries or violates a structural precondition."""


class InvalidStateError(ValueError):
    """A purported quantum state fails its defining constraints."""


class DegenerateInputError(ValueError):
    """Inputs coincide where distinct values are required."""


class BudgetError(ValueError):
    """An optimization was requested with a zero or negative budget."""


class SingularMapError(RuntimeError):
    """A propagator cannot be extracted because the base map is too ill-conditioned.

    Carries the offending condition number.
    """

    def __init__(self, message: str, condition_number: float):
        super().__init__(message)
        self.condition_number = condition_number


class NotApplicableError(RuntimeError):
    """The requested monitor is undefined for this trajectory (e.g. non-unital)."""


class ScenarioError(ValueError):
    """A scenario file fails schema validation; message names the failing field."""


class AdmissionError(RuntimeError):
    """The integrated trajectory is not a legitimate (completely positive) dynamical map."""


class NumericalFailureError(RuntimeError):
    """Integration or analysis produced non-finite values."""
