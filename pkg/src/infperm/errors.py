"""Exception types shared across the package."""


class InfPermError(Exception):
    """Base class for all package errors."""


class SizeLimitError(InfPermError, ValueError):
    """An enumeration was requested beyond its configured cap."""


class IncompleteTableError(InfPermError, KeyError):
    """A moment or cumulant table lacks an entry needed by a transform."""


class UndefinedExponentError(InfPermError, ValueError):
    """The base-N exponent of an empty admissible set was requested."""


class DegenerateFitError(InfPermError, ValueError):
    """The least-squares design for a 1/N fit is rank deficient."""
