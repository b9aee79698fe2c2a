"""Exception types raised across the package."""


class VerifcsError(Exception):
    """Base class for all package errors."""


class ConstructionInfeasible(VerifcsError):
    pass


class ParseError(VerifcsError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionMismatch(VerifcsError, ValueError):
    pass


class IndexOutOfRange(VerifcsError, IndexError):
    pass


class InvalidSparsity(VerifcsError, ValueError):
    pass


class InternalInconsistency(VerifcsError, RuntimeError):
    """A hard decoder invariant was violated; always a bug."""


class PartialState(VerifcsError):
    """Signal requested from a decoder that still has unidentified variables."""


class NothingToSample(VerifcsError):
    pass


class SampleUnavailable(VerifcsError):
    """The direct-sampling oracle could not supply a value."""


class InstanceTooLarge(VerifcsError, ValueError):
    pass


class DegenerateFit(VerifcsError, ValueError):
    pass


class InsufficientFailures(VerifcsError):
    """Raised only where a caller asks for strictness; harness results carry
    a flag instead."""
