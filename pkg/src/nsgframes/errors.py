"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`NsgfError`; the CLI maps :class:`NsgfIOError` to exit code 3 and
everything else to exit code 2.
"""


class NsgfError(Exception):
    """Base class for all package errors."""


class ParameterError(NsgfError, ValueError):
    """Invalid or inconsistent parameters."""


class DimensionError(NsgfError, ValueError):
    """Lengths or structures do not match."""


class NsgfIOError(NsgfError, OSError):
    """File could not be read or written."""


class FormatError(NsgfIOError):
    """Malformed file contents."""


class UnsupportedFormatError(FormatError):
    """Well-formed file using an encoding we do not read."""


class CoveringError(NsgfError, ValueError):
    """Covering has a gap, or a partition of unity cannot be formed."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class SeparationError(CoveringError):
    """Weight centers are not separated (delta = 0)."""


class PainlessError(ParameterError):
    """Window support exceeds its channel count."""


class TilingError(ParameterError):
    """Hop does not tile the signal length."""


class FrameError(NsgfError, ValueError):
    """System is not a frame (G vanishes somewhere)."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class SymmetryError(NsgfError, ValueError):
    """Synthesis produced a non-negligible imaginary part."""


class SchedulingError(ParameterError):
    """Onsets cannot be turned into a valid window schedule."""


class FitError(NsgfError, ValueError):
    """Not enough usable points for a regression."""


class DegenerateInputError(NsgfError, ZeroDivisionError):
    """Input with zero norm where a ratio is required."""


class NearSingularWarning(UserWarning):
    """Lower frame bound is tiny relative to the upper bound."""
