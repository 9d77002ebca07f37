"""Exception hierarchy shared by all csmag modules."""


class CsmagError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(CsmagError, ValueError):
    """Invalid signal or experiment configuration."""


class DomainError(CsmagError, ValueError):
    """Argument outside the domain of an operation."""


class DimensionError(CsmagError, ValueError):
    """Array lengths or operator sizes do not agree."""


class SymmetryError(CsmagError, ValueError):
    """Spectrum is not conjugate-symmetric enough to map back to a real series."""


class BindingError(CsmagError, ValueError):
    """Measurement record does not belong to the operator it is used with."""


class InsufficientDataError(CsmagError, ValueError):
    """Too few usable points for a fit."""


class FormatError(CsmagError, ValueError):
    """A file does not follow its documented schema."""
