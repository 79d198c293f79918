"""Exception types shared across the package."""


class TempoSnnError(Exception):
    """Base class for all package errors."""


class ArgumentError(TempoSnnError):
    """A caller violated a precondition (bad shape, bad value, bad config)."""


class DataFormatError(TempoSnnError):
    """A file or byte stream does not conform to its declared format."""


class NumericError(TempoSnnError):
    """A numeric failure: non-finite values, divergence."""
