"""Exception and warning types raised by limvam."""


class LimvamError(Exception):
    """Base class for all errors raised by this package."""


class ZeroVarianceError(LimvamError):
    """A (view, variable) series has (numerically) zero sample variance."""

    def __init__(self, message, view=None, variable=None):
        super().__init__(message)
        self.view = view
        self.variable = variable


class CyclicGraphError(LimvamError):
    """The support of an adjacency matrix contains a directed cycle."""


class SingularSystemError(LimvamError):
    """A covariance or normal matrix could not be inverted.

    ``matrix`` names which matrix failed (``"ols_gram"``,
    ``"residual_cov"`` or ``"normal_matrix"``).
    """

    def __init__(self, message, matrix):
        super().__init__(message)
        self.matrix = matrix


class NonPositiveDefiniteError(LimvamError):
    """A covariance matrix has an eigenvalue at or below the PD threshold."""

    def __init__(self, message, matrix):
        super().__init__(message)
        self.matrix = matrix


class InvalidCoefficientError(LimvamError):
    """A regression coefficient lies outside the admissible range."""


class ShapeMismatchError(LimvamError, ValueError):
    """Arrays that must share a shape do not."""


class DegenerateRowError(LimvamError):
    """A row of an unmixing matrix has no usable (non-negligible) entry."""


class ZeroDiagonalError(LimvamError):
    """A permuted unmixing diagonal entry is (numerically) zero."""

    def __init__(self, message, view, row):
        super().__init__(message)
        self.view = view
        self.row = row


class UnstableTripleError(LimvamError):
    """No view pair gives a usable denominator in the triple-product rule."""


class ParseError(LimvamError):
    """A data file could not be parsed; carries the file, line and column."""

    def __init__(self, message, path, line, column):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.path = path
        self.line = line
        self.column = column


class DimensionMismatchError(LimvamError):
    """Dataset dimensions disagree with the manifest."""

    def __init__(self, message, expected=None, found=None):
        if expected is not None or found is not None:
            message = f"{message}: expected {expected}, found {found}"
        super().__init__(message)
        self.expected = expected
        self.found = found


class SampleSizeWarning(UserWarning):
    """n <= m * p: the stacked regressions are poorly determined."""


class NoConvergenceWarning(UserWarning):
    """An iterative solver stopped at its sweep limit."""
