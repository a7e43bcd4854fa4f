"""Exception types shared across the package."""


class ThicketError(Exception):
    """Base class for package errors."""


class SequenceFormatError(ThicketError):
    """A sequence directory or manifest is malformed or references missing files."""


class DimensionMismatchError(ThicketError):
    """Frames within one sequence do not share identical dimensions."""


class TimestampOrderError(ThicketError):
    """Frame timestamps are not strictly increasing with index."""
