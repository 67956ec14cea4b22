"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class MoscapError(Exception):
    exit_code = 1


class ParseError(MoscapError, ValueError):
    """Malformed CSV or config text. ``line``/``column`` are 1-based."""

    exit_code = 1

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class NotFoundError(MoscapError, KeyError):
    exit_code = 1

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class InvalidInputError(MoscapError, ValueError):
    exit_code = 3


class UnsupportedOperationError(MoscapError, TypeError):
    exit_code = 3


class RegimeError(InvalidInputError):
    pass


class NoPlateauError(InvalidInputError):
    pass


class OutOfRangeError(InvalidInputError):
    pass


class ProfileUndefinedError(InvalidInputError):
    def __init__(self, message, interval=None):
        self.interval = interval
        super().__init__(message)


class ConvergenceError(MoscapError, ArithmeticError):
    """Numerical failure. ``bracket`` or ``best`` hold whatever partial state exists."""

    exit_code = 2

    def __init__(self, message, bracket=None, best=None):
        self.bracket = bracket
        self.best = best
        super().__init__(message)


class RankDeficiencyError(ConvergenceError):
    def __init__(self, message, parameters=()):
        self.parameters = tuple(parameters)
        super().__init__(message)
