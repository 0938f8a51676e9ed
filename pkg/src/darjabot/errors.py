"""Exception hierarchy shared across the engine.

The CLI maps these onto exit codes: usage/config problems exit 1,
malformed data exits 2, everything else exits 3.
"""


class DarjabotError(Exception):
    """Base class for all engine errors."""


class ConfigError(DarjabotError):
    """Invalid configuration, missing artifact, or bad startup state."""


class DataError(DarjabotError):
    """Malformed input data: datasets, lexicons, templates, documents."""


class IndexFormatError(DataError):
    """Corrupt or unsupported on-disk index / model file."""


class DivergenceError(DarjabotError):
    """Training loss became non-finite."""


class ProviderError(DarjabotError):
    """Remote provider failure (embedding or generation)."""

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable
