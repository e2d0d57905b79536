"""Exception hierarchy shared across the package."""


class StatArbError(Exception):
    """Base class for all package errors."""


class InvalidInputError(StatArbError):
    """Malformed or dimensionally inconsistent input."""


class NumericalError(StatArbError):
    """Numerical failure (singular innovation covariance, non-PSD matrix, ...)."""


class InsufficientHistoryError(StatArbError):
    """Not enough observations for the requested window or fit."""


class SingularDesignError(StatArbError):
    """Rank-deficient cross-sectional regression design.

    Carries the offending column indices/names in `columns`.
    """

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class PanelFormatError(StatArbError):
    """CSV panel fails schema validation (missing column, bad row, duplicate key)."""


class ConfigError(StatArbError):
    """Run configuration failed validation.

    `problems` lists every failure found, not just the first.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
