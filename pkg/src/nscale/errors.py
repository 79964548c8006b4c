"""Exception hierarchy shared by all nscale modules."""


class NScaleError(Exception):
    """Base class for every error raised by this package."""


class InputError(NScaleError, ValueError):
    """Bad argument: wrong dimension, out-of-range index, nonpositive scale..."""


class ConfigError(InputError):
    """Experiment configuration failed validation."""


class ResolutionError(InputError):
    """Quadrature grid does not resolve the finest oscillation."""


class ExtrapolationError(InputError):
    """Query point lies outside the tabulated region (or its margin)."""


class DependencyError(NScaleError):
    """A required upstream result (e.g. a corrector level) is missing."""


class EllipticityError(NScaleError):
    """Coefficient tensor is not symmetric positive definite."""


class ConvergenceError(NScaleError):
    """Iterative solver hit its iteration cap.

    The final relative residual is kept on ``residual``.
    """

    def __init__(self, message, residual=float("nan"), level=None):
        super().__init__(message)
        self.residual = residual
        self.level = level


class ConsistencyError(NScaleError):
    """A numerical identity that should hold (e.g. symmetry) is violated."""


class NotPSDError(NScaleError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class StabilityError(InputError):
    """Time step violates the explicit-integrator stability bound."""

    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class BlowUpError(NScaleError):
    """A trajectory left the safety box."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
