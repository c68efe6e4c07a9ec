"""Exception types shared across the package."""


class IndricError(Exception):
    """Base class for all errors raised by this package."""


class NonSquare(IndricError):
    """A square matrix was required."""


class NotPositiveDefinite(IndricError):
    """A symmetric factorization hit a non-positive pivot.

    Carries optional context: ``pivot`` (column index) and ``where``
    (batch/node index the failure occurred at, if the input was a stack).
    """

    def __init__(self, msg="matrix is not positive definite", pivot=None, where=None):
        super().__init__(msg)
        self.pivot = pivot
        self.where = where


class OutOfDomain(IndricError):
    """A time outside [0, T] was passed to a path evaluation."""


class DimensionMismatch(IndricError):
    """Operands live on incompatible grids or have incompatible shapes."""


class SingularD(IndricError):
    """The control-noise matrix D is singular at some time."""

    def __init__(self, msg="D is singular", at_time=None):
        super().__init__(msg)
        self.at_time = at_time


class AlphaOutOfRange(IndricError):
    """The certificate parameter alpha must lie strictly inside (0, 1)."""


class NotNormalized(IndricError):
    """An operation requiring D = I was called on a non-normalized problem."""


class NonPositiveScale(IndricError):
    """Weight scaling requires a strictly positive factor."""


class ParseError(IndricError):
    """A problem file could not be decoded."""


class ValidationError(IndricError):
    """A problem file decoded fine but violates the schema constraints."""
