"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConstructionError(ValueError):
    """Parameters violate the invariants of a model object."""


class UnsupportedShapeError(ValueError):
    """A distribution does not have the atom layout an operation requires."""


class AccuracyError(RuntimeError):
    """Adaptive quadrature could not reach the requested tolerance.

    ``estimate`` and ``error`` carry the best values obtained.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConvergenceError(RuntimeError):
    """An iterative fit stopped before converging; ``best`` is the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(ValueError):
    """A scenario file is unreadable or a field is invalid; the message names the field."""
