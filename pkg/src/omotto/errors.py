"""Exception hierarchy.

Every error carries a ``category`` string; the command-line front-end maps
categories onto exit codes.
"""


class OttoError(Exception):
    category = "numeric"


class ValidationError(OttoError, ValueError):
    category = "validation"


class UsageError(OttoError, TypeError):
    category = "validation"


class StabilityError(OttoError):
    """Raised when a drift matrix has an eigenvalue with non-negative real part."""

    category = "stability"

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class TrapInversionError(OttoError):
    """The modified frequency became non-real at time ``t``."""

    category = "trap-inversion"

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConvergenceError(OttoError):
    category = "convergence"


class NumericError(OttoError):
    category = "numeric"


class DivergenceError(NumericError):
    def __init__(self, message, t=None, trajectory=None):
        super().__init__(message)
        self.t = t
        self.trajectory = trajectory


class RefrigeratorError(NumericError):
    """Heat denominator is not positive: the cycle does not run as an engine."""


class RootNotFoundError(NumericError):
    pass
