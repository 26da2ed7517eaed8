"""Exception hierarchy shared by the library and the CLI."""


class FgscanError(Exception):
    """Base class for all errors raised by fgscan."""


class DataError(FgscanError, ValueError):
    """Input data violate a structural requirement."""


class CsvFormatError(DataError):
    """A CSV file could not be parsed into a dataset.

    ``row`` and ``column`` are 1-based locations in the file (the header is
    row 1); either may be None when the problem is not cell specific.
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        suffix = f" at {', '.join(loc)}" if loc else ""
        super().__init__(f"{message}{suffix}")


class NoPrimaryEventsError(DataError):
    """The data contain no cause-1 events, so the model is not estimable."""

    def __init__(self, message="no primary events (status = 1) in data"):
        super().__init__(message)


class NumericalError(FgscanError, ArithmeticError):
    """A numerical failure during estimation."""


class ScanOverflowError(NumericalError):
    """Linear predictor left the range where exp() is safe."""


class ZeroDenominatorError(NumericalError):
    """A risk-set sum evaluated to zero (or a weight divided by zero)."""


class DegenerateColumnError(NumericalError):
    """Coordinate with zero curvature but a nonzero score."""


class BootstrapError(FgscanError):
    """Too many bootstrap replicates were unusable."""
