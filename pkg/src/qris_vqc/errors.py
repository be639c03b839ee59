"""Exception types raised across the package."""


class ConstraintViolation(ValueError):
    """A value lies outside its admissible interval (e.g. damping above gamma_max)."""


class DegenerateInputError(ValueError):
    """Input cannot be normalized, e.g. an all-zero image vector."""


class DatasetFormatError(ValueError):
    """A dataset or params file is malformed.

    The message names the offending line number and field.
    """


class FormatVersionError(DatasetFormatError):
    """A file carries a format version this build does not read."""
