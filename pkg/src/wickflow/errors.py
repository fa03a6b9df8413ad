"""Exception and warning classes shared across the package."""


class KindMismatchError(TypeError):
    """Coefficient kinds or dimensions cannot be combined."""


class TruncationDomainError(ValueError):
    """An expansion reaches outside the truncation an operator is defined on."""


class DegenerateRateError(ValueError):
    """The growth rate ``w + M*|B_0|`` is not positive."""


class HypothesisError(ValueError):
    """Solver hypotheses fail; ``report`` carries the per-condition margins."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


class BoundViolationWarning(UserWarning):
    """A declared semigroup bound ``|T_t| <= M exp(w t)`` is violated on the sample grid."""


class GridTooCoarseWarning(UserWarning):
    """Halving the time grid changes the solution by more than the tolerance."""
