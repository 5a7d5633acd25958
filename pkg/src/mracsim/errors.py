"""Exception taxonomy for the package.

Everything derives from MracSimError so callers can catch broadly; the
subclasses also inherit the builtin they most resemble (ValueError,
RuntimeError, ...) so generic handling keeps working.
"""


class MracSimError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MracSimError, ValueError):
    """Array argument has the wrong shape or length."""


class StabilityError(MracSimError, ValueError):
    """A matrix required to be Hurwitz (or positive definite) is not."""


class ConvergenceError(MracSimError, RuntimeError):
    """An iterative solver failed to reach its residual target."""


class NumericError(MracSimError, ArithmeticError):
    """A computation produced non-finite values; the message carries context."""


class DivergenceError(MracSimError, RuntimeError):
    """A simulated signal left the configured guard bounds."""

    def __init__(self, message, *, t=None, signal=None, value=None):
        super().__init__(message)
        self.t = t
        self.signal = signal
        self.value = value


class PolicyParseError(MracSimError, ValueError):
    """Policy weights file is not well-formed text/JSON."""


class PolicySchemaError(MracSimError, ValueError):
    """Policy weights file parsed but violates the documented schema."""
