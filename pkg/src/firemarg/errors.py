"""Exception types shared across the package."""


class FiremargError(Exception):
    """Base class for package-specific errors."""


class IngestError(FiremargError):
    """Raised when a CSV input cannot be turned into a valid dataset.

    Carries the 1-based data row number where the problem occurred, or
    None for file-level problems.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class GeometryError(FiremargError):
    """Invalid geometric input (non-finite coordinate, pole-crossing cell)."""


class DataError(FiremargError):
    """Data inconsistency beyond numerical noise (e.g. burnt area exceeding
    the cell's burnable capacity)."""


class GpdFitError(FiremargError):
    """Tail fit cannot proceed (too few or degenerate exceedances).

    Callers treat this as the signal to fall back to a fully empirical
    distribution.
    """
