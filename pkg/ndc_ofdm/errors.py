"""
Exception types raised by the simulation and analysis code.
"""


class NdcOfdmError(Exception):
    """Base class for all toolkit errors."""


class InputSizeError(NdcOfdmError, ValueError):
    """Wrong number of bits, symbols or samples for the requested operation."""


class DomainError(NdcOfdmError, ValueError):
    """Argument outside the domain where the operation is defined."""


class FrameInvariantError(NdcOfdmError):
    """A spectral frame violates Hermitian symmetry beyond tolerance."""


class MatrixInversionError(NdcOfdmError):
    """Channel matrix is singular or not square."""


class NumericalDegeneracyError(NdcOfdmError):
    """The analytical pipeline produced a non-positive noise variance."""


class NoSolutionError(NdcOfdmError):
    """No power-of-two constellation reaches the requested spectral efficiency."""


class ConfigError(NdcOfdmError):
    """Malformed or invalid experiment configuration."""


class ChannelLookupError(ConfigError, KeyError):
    """Unknown preset channel id."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


# Errors that the CLI reports with the numerical-error exit code
NUMERICAL_ERRORS = (
    MatrixInversionError,
    NumericalDegeneracyError,
    NoSolutionError,
    FrameInvariantError,
)
