"""Exception and warning types shared across leafdim."""


class LeafdimError(Exception):
    """Base class for all leafdim errors."""


class NotUnimodular(LeafdimError):
    pass


class UnsupportedDimension(LeafdimError):
    pass


class SplittingError(LeafdimError):
    """The matrix does not have the eigen-structure the estimators need."""


class ComplexSpectrum(SplittingError):
    pass


class NoUnstableDirection(SplittingError):
    pass


class MultipleUnstable(SplittingError):
    pass


class Infeasible(LeafdimError):
    pass


class CountBudgetExceeded(LeafdimError):
    """A minimal cover would need more pieces than the configured budget."""


class DegeneratePlaque(LeafdimError):
    pass


class IndeterminateTrend(LeafdimError):
    """Critical-exponent bracketing failed; ``result`` carries the data."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(LeafdimError):
    """Malformed experiment configuration; ``where`` locates the problem."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class NonStabilized(UserWarning):
    """Estimates across the two finest covers (or radii) disagree."""


class EmptyTrace(UserWarning):
    """Every sampled leaf ball missed the ambient set."""
