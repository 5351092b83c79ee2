"""Exception hierarchy.

Each class carries the process exit code the command-line front end uses
when the error escapes a command.
"""


class SoaError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InputError(SoaError, ValueError):
    """Malformed input: bad files, bad arguments, out-of-range indices."""

    exit_code = 2


class ParseError(InputError):
    """Syntax error in a model expression."""

    def __init__(self, message, line=1, column=1, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at line {line}, column {column}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class CoverageError(SoaError, KeyError):
    """An elementary table lacks an entry the computation needs."""

    exit_code = 3

    def __str__(self):
        return str(self.args[0]) if self.args else "coverage error"


class ConvergenceError(SoaError):
    """The sparse expansion did not reach the requested truncation error."""

    exit_code = 4


class ModelEvaluationError(SoaError):
    """The model failed at a particular input point."""

    def __init__(self, point, cause):
        self.point = tuple(float(v) for v in point)
        self.cause = cause
        super().__init__(f"model evaluation failed at x={self.point}: {cause}")


class EvaluationError(InputError):
    """A model expression cannot be evaluated at a point (division by zero, bad input)."""
