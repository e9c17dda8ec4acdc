"""Exception hierarchy shared by all layers."""


class RarefiedError(Exception):
    """Base class for every error raised by this package."""


class DomainError(RarefiedError, ValueError):
    """Argument outside the domain of a function (zero argument, |nome| >= 1, ...)."""


class TruncationError(RarefiedError):
    """An infinite product or series did not reach its tolerance within ``max_terms``."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class PoleProximityError(RarefiedError):
    """Argument lies within the relative pole threshold of a gamma-function pole."""

    def __init__(self, message, index=None, distance=None):
        super().__init__(message)
        self.index = index
        self.distance = distance


class BalancingError(RarefiedError, ValueError):
    """Parameters violate a balancing condition."""


class ParityError(RarefiedError, ValueError):
    """Discrete variables have inconsistent parities."""


class ContourPinchError(RarefiedError):
    """No admissible integration contour separates the pole families."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class NodeSingularityError(RarefiedError):
    """A quadrature kernel returned a non-finite value at a node."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ConvergenceError(RarefiedError):
    """Quadrature refinement did not converge; carries the convergence history."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class PeriodicityError(RarefiedError, ValueError):
    """A kernel is not 1-periodic in the continuous variable and cannot use circle quadrature."""


class UnsupportedNormalizationError(RarefiedError, NotImplementedError):
    """The Boltzmann-weight normalization is only known at vanishing discrete rapidity."""


class ResourceLimitError(RarefiedError):
    """Requested problem size exceeds a configured cap."""
