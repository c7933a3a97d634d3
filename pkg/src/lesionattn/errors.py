"""Exception types shared across the package."""


class LesionAttnError(Exception):
    """Base class for all errors raised deliberately by this package."""


class ConfigError(LesionAttnError):
    """A configuration value is missing, malformed, or out of range."""


class ManifestError(LesionAttnError):
    """A corpus manifest is malformed.

    ``line_number`` is 1-based and refers to the offending JSONL line when
    known, else None.
    """

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"manifest line {line_number}: {message}"
        super().__init__(message)


class LexiconError(LesionAttnError):
    """A lexicon or rule file fails validation."""


class CheckpointError(LesionAttnError):
    """A checkpoint directory is missing files or inconsistent with its header."""
