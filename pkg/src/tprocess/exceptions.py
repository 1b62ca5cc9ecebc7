"""Exception hierarchy shared across the package."""


class TProcessError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TProcessError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConvergenceError(TProcessError, ArithmeticError):
    """A series or iterative procedure did not reach its tolerance.

    Attributes
    ----------
    partial : float
        Value accumulated when the procedure stopped.
    n_terms : int
        Number of terms (or iterations) consumed.
    """

    def __init__(self, message, partial=float("nan"), n_terms=0, **diagnostics):
        super().__init__(message)
        self.partial = partial
        self.n_terms = n_terms
        self.diagnostics = diagnostics


class DivergenceError(DomainError):
    """The requested series diverges at the given argument."""


class UnsupportedDimensionError(DomainError):
    """Dimension above the supported cap."""


class NotPositiveDefiniteError(TProcessError, ArithmeticError):
    """A correlation matrix failed Cholesky factorisation even after jitter."""


class ObjectiveError(TProcessError, ArithmeticError):
    """The pairwise likelihood could not be evaluated for some pair."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class DataError(TProcessError, ValueError):
    """Malformed input data file."""


class ConfigError(TProcessError, ValueError):
    """Invalid run configuration."""
