"""Exception types raised by the model, fits and CLI."""


class ParameterError(ValueError):
    """Invalid or non-finite physical parameter."""


class SingularityError(ArithmeticError):
    """The loop denominator vanished (or nearly so) at a real frequency."""

    def __init__(self, omega, message=None):
        self.omega = omega
        super().__init__(message or f"loop denominator singular at omega={omega!r} rad/s")


class InstabilityError(ArithmeticError):
    """Linearized dynamics have no steady state (anti-damping or parametric instability)."""


class ConsistencyError(RuntimeError):
    """An internal algebraic self-check failed."""


class FitError(RuntimeError):
    """A fit could not be performed or did not converge.

    ``last`` holds the final iterate when one exists.
    """

    def __init__(self, message, last=None):
        self.last = last
        super().__init__(message)
