"""Exception hierarchy. CLI maps DataError and friends to exit code 2."""


class HyqaError(Exception):
    """Base class for all errors raised by this package."""


class DataError(HyqaError):
    """Malformed or inconsistent input data."""


class CorpusError(DataError):
    pass


class IndexFormatError(DataError):
    pass


class FingerprintMismatchError(DataError):
    """Dense index was built with a different embedding provider."""


class UnknownPassageError(DataError):
    pass


class DimensionMismatchError(DataError):
    """Vector length does not match the declared embedding dimension."""


class ParseError(DataError):
    """Generated sequence does not follow the separator format."""


class LocalizationError(DataError):
    """Answer could not be anchored inside its source passage."""


class ProviderError(HyqaError):
    """External provider subprocess failed or misbehaved."""
