"""Exception types shared across the package."""


class QubitPairError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(QubitPairError, ValueError):
    """Invalid configuration or a model requested outside its validity range."""


class CrossingSingularity(QubitPairError):
    """An X jump frequency coincides with a Z jump frequency.

    Master equations that drop the x-z cross terms are not valid on (or within
    tolerance of) this parameter surface.
    """

    def __init__(self, lam, omega_plus, omega_minus, residual):
        self.lam = lam
        self.omega_plus = omega_plus
        self.omega_minus = omega_minus
        self.residual = residual
        super().__init__(
            f"frequency crossing at lambda={lam!r}, omega_plus={omega_plus!r}, "
            f"omega_minus={omega_minus!r} (residual {residual:.3e}); x-z cross "
            "terms cannot be dropped here, use a threshold secular rule or "
            "move the parameters")


class NoConvergence(QubitPairError):
    """A long-time limit did not settle within the allowed horizon."""


class StepFailure(QubitPairError):
    """Adaptive time stepping could not meet its error tolerance."""


class QuadratureError(QubitPairError):
    """A numerical integral did not reach the requested accuracy."""
