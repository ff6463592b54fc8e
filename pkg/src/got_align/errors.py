"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` (CLI exit code 2),
numerical breakdowns from :class:`NumericalError` (CLI exit code 3).
"""


class GotAlignError(Exception):
    """Base class for all package errors."""


class ValidationError(GotAlignError, ValueError):
    pass


class NumericalError(GotAlignError, ArithmeticError):
    pass


class InvalidGraph(ValidationError):
    pass


class NonSymmetric(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InfeasibleKmax(ValidationError):
    pass


class KTooLarge(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class DegenerateLabels(ValidationError):
    pass


class TooFewVertices(ValidationError):
    pass


class DisconnectedAfterRetries(ValidationError):
    pass


class SingularAfterShift(NumericalError):
    pass


class SingularSource(NumericalError):
    pass


class EigenFailure(NumericalError):
    pass


class DegenerateSpectrum(NumericalError):
    pass


class Overflow(NumericalError):
    pass


class ZeroRow(NumericalError):
    pass


class ZeroColumn(NumericalError):
    pass


class NonFinite(NumericalError):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IndexOutOfRange(ParseError):
    pass


class MissingFile(ValidationError, FileNotFoundError):
    pass


class InconsistentIndicator(ValidationError):
    pass
