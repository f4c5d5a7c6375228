"""Exception types shared across the package."""


class IrtError(Exception):
    """Base class for package-specific failures."""


class ConfigError(IrtError):
    """Invalid configuration, file, or argument combination (CLI exit code 2)."""


class NumericError(IrtError):
    """Numeric failure that makes the requested computation undefined (CLI exit code 3)."""


class DegenerateScaleError(NumericError):
    """Raised when a scale parameter (e.g. sd of abilities) collapses to zero."""


class DegenerateLabelsError(NumericError):
    """Raised when a computation requires both label classes but only one is present."""
