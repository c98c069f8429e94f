"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Two arrays that must share a shape do not."""


class NegativeCellError(ValueError):
    """A table would contain a negative count."""


class TableFormatError(ValueError):
    """Input text could not be parsed as a contingency table."""


class ResourceLimitError(RuntimeError):
    """An exhaustive enumeration exceeded its configured state cap."""


class FitError(ArithmeticError):
    """A fitted table is incompatible with the observed counts."""
