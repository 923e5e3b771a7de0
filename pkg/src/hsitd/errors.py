"""Exception types raised across the package.

The CLI maps each family onto an exit code, so new errors should subclass
one of the three below rather than ``HsiError`` directly.
"""


class HsiError(Exception):
    """Base class for all package errors."""


class ValidationError(HsiError, ValueError):
    """Bad argument, shape mismatch or degenerate input."""


class CubeFormatError(HsiError, OSError):
    """Unreadable, missing or malformed file."""


class NumericalError(HsiError, ArithmeticError):
    """A solver produced non-finite iterates or a factorization failed."""
