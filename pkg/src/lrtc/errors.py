"""Exception types shared across the package."""


class LRTCError(Exception):
    """Base class for all errors raised by lrtc."""


class DimensionError(LRTCError, ValueError):
    """Operand shapes do not conform."""


class ModeError(LRTCError, IndexError):
    """A tensor mode is outside 1..N."""


class ParameterError(LRTCError, ValueError):
    """A scalar parameter is outside its admissible range."""


class DomainError(LRTCError, ValueError):
    """An input value lies outside the operator's domain."""


class NumericalError(LRTCError, ArithmeticError):
    """A numerical routine (the SVD) failed to converge or produced non-finite output."""


class SpecError(LRTCError, ValueError):
    """A problem specification is inconsistent, e.g. a rank exceeds its extent."""


class MetricError(LRTCError, ArithmeticError):
    """An evaluation metric is undefined for the given inputs."""


class FormatError(LRTCError, ValueError):
    """A binary or image file does not match its format.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
