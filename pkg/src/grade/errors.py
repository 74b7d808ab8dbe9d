"""Exception types raised across the package."""


class GradeError(Exception):
    """Base class for all package errors."""


class BadStep(GradeError, ValueError):
    pass


class NonFiniteState(GradeError, FloatingPointError):
    pass


class GridMismatch(GradeError, ValueError):
    pass


class SingularLocalDesign(GradeError, ArithmeticError):
    """The local polynomial design is too ill-conditioned at a query time.

    Usually the bandwidth is too small for the local data.
    """


class AllSingular(GradeError, ArithmeticError):
    pass


class QuadTooCoarse(GradeError, ValueError):
    pass


class DegenerateGroup(GradeError, ArithmeticError):
    pass


class NoConvergence(GradeError, RuntimeWarning):
    """Issued as a warning when a solver hits its sweep limit."""


class InsufficientData(GradeError, ValueError):
    pass


class TargetUnreachable(GradeError, ValueError):
    """No multiplier on the searchable range reaches the requested edge count.

    ``alpha`` and ``fits`` hold the densest probe when one was made.
    """

    def __init__(self, message, alpha=None, fits=None):
        super().__init__(message)
        self.alpha = alpha
        self.fits = fits


class DimensionMismatch(GradeError, ValueError):
    pass


class SchemaError(GradeError, ValueError):
    """A file on disk does not match the expected layout."""
