"""Exception types shared across the package."""


class SalesMixError(Exception):
    """Base class for all package errors."""


class ConfigError(SalesMixError):
    """Invalid or unreadable system configuration."""


class ParameterError(SalesMixError, ValueError):
    """An argument is outside its admissible domain."""


class InfeasibleError(SalesMixError):
    """A market clearing or allocation problem has no feasible point.

    ``shortfall`` is the unmet energy in MWh where that is meaningful.
    """

    def __init__(self, message, shortfall=None, scenario=None):
        super().__init__(message)
        self.shortfall = shortfall
        self.scenario = scenario


class ScenarioFormatError(SalesMixError):
    """Malformed scenario file. Carries the 1-based row and the column name."""

    def __init__(self, message, row=None, column=None):
        locus = []
        if row is not None:
            locus.append(f"row {row}")
        if column is not None:
            locus.append(f"column {column!r}")
        if locus:
            message = f"{message} ({', '.join(locus)})"
        super().__init__(message)
        self.row = row
        self.column = column
