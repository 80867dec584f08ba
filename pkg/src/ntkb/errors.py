"""Exception types shared across the package."""


class NtkbError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(NtkbError):
    """A data file violates its documented format (message carries the line number)."""


class VocabularyError(NtkbError):
    """A token does not resolve against a frozen vocabulary."""


class ConfigError(NtkbError):
    """Invalid configuration or mismatched dimensions."""


class NumericalError(NtkbError):
    """An objective or gradient evaluation produced non-finite values."""


class CheckpointError(NtkbError):
    """A checkpoint file is malformed, corrupted, or of an unsupported version."""
