"""Exception hierarchy.

Two families map onto the CLI exit codes: :class:`ValidationError` (bad
input or violated precondition, exit 2) and :class:`NumericalError`
(a computation that could not deliver a trustworthy answer, exit 3).
"""


class Gle2bdError(Exception):
    """Base class for all package errors."""


class ValidationError(Gle2bdError, ValueError):
    """Input or precondition violated."""


class NumericalError(Gle2bdError, ArithmeticError):
    """A numerical procedure failed or lost precision."""


class DomainError(ValidationError):
    """Argument outside the domain of a function."""


class MomentPrecisionError(NumericalError):
    """Requested kernel moments cannot be computed to the needed precision."""


class InversionError(NumericalError):
    """Resolvent or Laplace inversion failed."""


class NoBDLimitError(InversionError):
    """gamma + M_inf is singular, so there is no Brownian-dynamics limit."""


class FitDegeneracyError(NumericalError):
    """Moment-matching linear system is singular."""


class StabilityError(NumericalError):
    """A fitted drift matrix or an integrator setting is unstable."""


class FDTConstructionError(NumericalError):
    """Noise covariance or initial covariance is not positive semidefinite."""


class EmbeddingError(NumericalError):
    """Circulant embedding of a covariance sequence is not PSD."""


class SimulationError(NumericalError):
    """A trajectory left the finite range (overflow or NaN)."""


class TimeStepError(ValidationError, StabilityError):
    """Requested time step violates an integrator's stability guard."""
