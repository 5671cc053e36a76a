"""Exception types shared across the package."""


class RipsolveError(Exception):
    """Base class for all package errors."""


class DomainError(RipsolveError, ValueError):
    """An input lies outside the domain where an operation is defined."""


class SolverError(RipsolveError, RuntimeError):
    """An iterative solver failed to converge.

    The best iterate found so far is kept on ``best_iterate``.
    """

    def __init__(self, message, best_iterate=None):
        super().__init__(message)
        self.best_iterate = best_iterate


class PreconditionError(RipsolveError, ValueError):
    """A documented precondition does not hold.

    ``witness`` carries the data that demonstrates the violation, e.g. a
    competitor state with a lower energy-plus-dissipation value.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
