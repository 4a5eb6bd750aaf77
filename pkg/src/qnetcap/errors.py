"""Exception and warning types shared across the package."""


class QnetcapError(Exception):
    """Base class for all package errors."""


class DomainError(QnetcapError, ValueError):
    """An input lies outside the physical domain of an operation."""


class QuadratureError(QnetcapError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, abserr=None):
        super().__init__(message)
        self.abserr = abserr


class InfiniteCapacityError(QnetcapError, ArithmeticError):
    """Arithmetic was attempted on a tagged-infinite capacity."""


class WeakTurbulenceViolated(QnetcapError):
    """Hard failure of the weak-turbulence (Yura) condition."""


class WeakTurbulenceWarning(UserWarning):
    """Soft failure of the weak-turbulence assumptions."""


class LineOfSightWarning(UserWarning):
    """A link length exceeds the Earth-occlusion limit."""


class NodeNotFound(QnetcapError, KeyError):
    pass


class TooLarge(QnetcapError):
    pass


class SameCommunity(QnetcapError):
    pass


class NotRegular(QnetcapError):
    pass


class SpecMismatch(QnetcapError):
    pass


class NoSolution(QnetcapError):
    pass


class ConfigError(QnetcapError, ValueError):
    """Malformed or unknown configuration content."""


class ChannelError(QnetcapError):
    """A channel attached to a network edge could not be evaluated."""

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge
