"""Exception hierarchy mapped onto CLI exit codes."""


class CodecError(Exception):
    """Base class for all package errors."""


class DataError(CodecError):
    """Invalid or malformed input data (exit code 2)."""


class FormatError(DataError):
    """Structured binary/text parse failure naming the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{message} (field: {field})")


class MissingAssetError(CodecError):
    """A required model asset or checkpoint is not available (exit code 3)."""
