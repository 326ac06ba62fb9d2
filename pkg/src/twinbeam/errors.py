"""Exception hierarchy. The CLI maps these onto exit codes."""


class TwinbeamError(Exception):
    """Base class for all package errors."""


class ValidationError(TwinbeamError, ValueError):
    """Invalid parameters or input data."""


class ParseError(ValidationError):
    """Malformed time-tag CSV; carries the offending 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class FormatError(ValidationError):
    """Malformed TTAG binary file. ``code`` is one of the FORMAT_* constants."""

    def __init__(self, code, message):
        self.code = code
        super().__init__(f"{code}: {message}")


FORMAT_BAD_MAGIC = "bad_magic"
FORMAT_TRUNCATED = "truncated"
FORMAT_UNSUPPORTED_VERSION = "unsupported_version"
FORMAT_BAD_RECORD = "bad_record"


class SchemaError(ValidationError):
    """Parameter document violates the schema; ``path`` names the field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class CalibrationError(ValidationError):
    """Shot-noise reference does not match the measured trace."""


class ConvergenceError(TwinbeamError, ArithmeticError):
    """A numerical procedure failed its own accuracy check."""
