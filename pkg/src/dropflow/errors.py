"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Matrix dimensions are inconsistent with each other."""


class DegenerateDataError(ValueError):
    """The data matrix is identically zero (rank 0), so the spectral
    analysis of the minimum is undefined."""


class MajorizationError(ValueError):
    """The target vector is not majorized by the source vector, so no
    orthogonal matrix with the requested diagonal exists."""


class ConditioningError(ValueError):
    """The input Gram matrix is numerically singular; whitening would
    amplify noise beyond double precision."""


class CsvParseError(ValueError):
    """A CSV file is ragged or contains non-numeric cells."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    """A sweep/CLI configuration is invalid."""


class DivergenceError(RuntimeError):
    """Gradient descent produced non-finite values or a runaway loss.

    Carries the last finite iterate so callers can inspect where the
    run left the stable region.
    """

    def __init__(self, message, weights=None, t=None):
        super().__init__(message)
        self.weights = weights
        self.t = t


class FitError(RuntimeError):
    """A least-squares fit has too few usable points or failed to
    converge. ``best`` holds the best parameters seen, if any."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class AggregationError(RuntimeError):
    """No fit in a group survived the positivity discard rule."""


class NumericError(RuntimeError):
    """An eigensolve or other numeric kernel failed."""
