"""Exception hierarchy.

``DataValidationError`` and its subclasses map to CLI exit code 2,
``NumericalError`` to exit code 3.
"""


class StagemlError(Exception):
    """Base class for all package errors."""


class DataValidationError(StagemlError, ValueError):
    """Malformed or inconsistent input data."""


class ParseError(DataValidationError):
    """A cell or row of a delimited file could not be read.

    ``row`` and ``column`` are 1-based file coordinates when known.
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row={row}")
        if column is not None:
            where.append(f"column={column}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class RaggedRowError(ParseError):
    pass


class NonNumericCellError(ParseError):
    pass


class NegativeValueError(ParseError):
    pass


class DuplicateIdError(ParseError):
    pass


class EmptyInputError(ParseError):
    pass


class UnknownStageError(DataValidationError):
    def __init__(self, code):
        self.code = code
        super().__init__(f"unknown pathological T stage code: {code!r}")


class StratificationError(DataValidationError):
    """A requested stratified split or fold assignment is impossible."""


class EmptySelectionError(DataValidationError):
    """Feature selection kept no features."""


class ShapeMismatchError(DataValidationError):
    """Input width does not match the fitted model."""


class SingleClassError(DataValidationError):
    """An operation needs both classes but got only one."""


class HyperparameterError(DataValidationError):
    """Unknown hyperparameter name or value outside its declared range."""


class ConfigError(DataValidationError):
    """Pipeline configuration failed schema validation."""


class LeakageError(StagemlError):
    """A fit-type stage was asked to fit on held-out rows."""


class NumericalError(StagemlError, ArithmeticError):
    """Numerical failure (NaN loss, rank-deficient whitening, ...)."""
