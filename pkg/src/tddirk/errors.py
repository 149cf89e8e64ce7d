"""Exception types shared across the package."""


class TDDIRKError(Exception):
    """Base class for all package errors."""


class DomainError(TDDIRKError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ParameterDomainError(DomainError):
    """A scheme-family parameter violates one of the family constraints."""


class UnknownSchemeError(TDDIRKError, KeyError):
    """Lookup of a scheme name that is not registered."""

    def __init__(self, name, available):
        self.name = name
        self.available = tuple(available)
        super().__init__(
            f"unknown scheme {name!r}; available: {', '.join(self.available)}"
        )

    def __str__(self):
        return self.args[0]


class PoleError(DomainError):
    """The stability function has a pole at the requested point."""

    def __init__(self, z, stage):
        self.z = z
        self.stage = stage
        super().__init__(f"R(z) has a pole at z={z!r} (stage {stage + 1}: z**2 * a_ii == 1)")


class NonconvergenceError(TDDIRKError):
    """Fixed-point stage iteration did not meet its stopping criterion.

    This is how a violation of the step-size restriction
    ``h < 1 / max sqrt(L_g |a_jj|)`` shows up in practice.
    """

    def __init__(self, stage, iterations, residual, step_index=None, time=None):
        self.stage = stage
        self.iterations = iterations
        self.residual = residual
        self.step_index = step_index
        self.time = time
        super().__init__(self._message())

    def _message(self):
        msg = (
            f"stage {self.stage + 1} did not converge after {self.iterations} "
            f"iterations (last update norm {self.residual:.3e})"
        )
        if self.step_index is not None:
            msg += f" at step {self.step_index} (t={self.time!r})"
        return msg

    def at_step(self, step_index, time):
        self.step_index = step_index
        self.time = time
        self.args = (self._message(),)
        return self


class IndeterminateOrderError(TDDIRKError):
    """A log-log slope could not be rounded to an integer order with confidence."""
