"""Exception types. Every error carries a stable machine-readable ``code``."""


class CavfError(Exception):
    code = "ERROR"


class ConvergenceFailure(CavfError):
    """The closest-point solver did not reach tolerance."""

    code = "CONVERGENCE_FAILURE"


class NumericFailure(CavfError):
    code = "NUMERIC_FAILURE"


class ParseError(CavfError):
    """Malformed scenario document. ``line``/``column`` are 1-based when known."""

    code = "PARSE_ERROR"

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationFailure(CavfError):
    """Schema-valid but physically invalid scenario.

    ``reason`` is a finer-grained code such as ``P_OUT_OF_RANGE`` or
    ``OVERLAPPING_OBSTACLES``.
    """

    code = "VALIDATION_FAILURE"

    def __init__(self, reason, message):
        super().__init__(f"{reason}: {message}")
        self.reason = reason


class IOFailure(CavfError):
    code = "IO_ERROR"
