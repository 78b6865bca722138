"""Exception classes shared across the package."""


class NTBandError(Exception):
    """Base class for all errors raised by this package."""


class CorrelationError(NTBandError, ValueError):
    """Correlation matrix is not symmetric / unit-diagonal / positive semi-definite."""


class SpecError(NTBandError, ValueError):
    """A model, signal, or run specification is internally inconsistent."""


class DataError(NTBandError, ValueError):
    """Input data is malformed (bad header, missing prices, too short)."""


class ConfigError(NTBandError, ValueError):
    """Config file is malformed or contains unknown keys."""
