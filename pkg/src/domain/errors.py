"""
Errors shared across services and text codecs.
"""


class InsufficientDataError(ValueError):
    """Raised when an analysis lacks the data volume it needs."""


class FitError(ValueError):
    """Raised when a scaling fit has fewer than three usable points."""


class FormatError(ValueError):
    """
    Malformed text input, located by line.

    Attributes:
        line: 1-based line number, None for whole-file errors
        source: File name, filled in by the reader when known
    """

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.source is not None:
            where = self.source if self.line is None else f"{self.source}:{self.line}"
            return f"{where}: {self.message}"
        if self.line is not None:
            return f"line {self.line}: {self.message}"
        return self.message

    def located(self, source: str) -> "FormatError":
        """Copy of the error carrying a file name."""
        return type(self)(self.message, line=self.line, source=source)


class InstanceFormatError(FormatError):
    """Raised when an instance file cannot be parsed."""


class TableFormatError(FormatError):
    """Raised when a tab-separated table cannot be parsed."""


class TraceFormatError(FormatError):
    """Raised when a trace dump cannot be parsed."""


class CampaignError(Exception):
    """Raised when a campaign stage fails or the campaign directory is inconsistent."""

    def __init__(self, message: str, stage: str | None = None, cause: Exception | None = None):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.cause = cause


class ConfigFormatError(FormatError):
    """Raised when a campaign config file is malformed or fails validation."""
