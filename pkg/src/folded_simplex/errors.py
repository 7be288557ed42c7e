"""Exception types raised across the package.

Every failure mode has its own class so callers (and the CLI) can map
errors to distinct exit codes instead of parsing messages.
"""


class FoldedSimplexError(Exception):
    """Base class for all library errors."""


class InvalidDimensionError(FoldedSimplexError, ValueError):
    """A dimension argument is out of range (e.g. D < 2)."""


class DataValidationError(FoldedSimplexError, ValueError):
    """Input data violates a precondition (zeros, bad row sums, shape)."""


class OutOfRegionError(FoldedSimplexError, ValueError):
    """A Euclidean point lies outside the image of the simplex."""


class FoldFailureError(FoldedSimplexError, ArithmeticError):
    """Folding produced a point that is still not a valid composition."""


class SingularFoldError(FoldedSimplexError, ArithmeticError):
    """The fold scale is (numerically) zero, so the fold is undefined."""


class NotPositiveDefiniteError(FoldedSimplexError, ValueError):
    """A covariance matrix has no Cholesky factorization."""


class DegenerateCovarianceError(FoldedSimplexError, ArithmeticError):
    """A covariance update inside an iterative fit became singular."""


class SingularCovarianceError(FoldedSimplexError, ValueError):
    """Too few observations to estimate a full-rank covariance."""


class NumericFailureError(FoldedSimplexError, ArithmeticError):
    """A computation produced non-finite values it cannot recover from."""


class NonConcaveProfileError(FoldedSimplexError, ArithmeticError):
    """The profile log-likelihood is not locally concave at its maximum."""


class UnsupportedDimensionError(FoldedSimplexError, ValueError):
    """The operation is only defined for a specific number of parts."""
