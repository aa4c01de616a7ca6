"""Exception types shared across the package."""


class CopstreamError(Exception):
    """Base class for all package-specific errors."""


class ParseError(CopstreamError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, path: str, line_no: int, message: str) -> None:
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class UnsupportedTaskError(CopstreamError):
    """The label column encodes something other than a binary task."""


class SchemaError(CopstreamError):
    """Feature typing is inconsistent with the data it describes."""


class ColdStartError(CopstreamError):
    """A latent transform was requested for a feature with no marginal history."""


class ConfigError(CopstreamError):
    """A run configuration is internally inconsistent."""
