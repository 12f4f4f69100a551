"""Exception hierarchy shared across the package."""


class ConsymError(Exception):
    """Base class for all errors raised by this package."""


class SpecError(ConsymError):
    """Invalid system definition or spec file (maps to CLI exit code 2)."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}" + (f", col {col})" if col is not None else ")")
        super().__init__(message)


class NumericalError(ConsymError):
    """Runtime numerical failure (maps to CLI exit code 3)."""


class ExprSyntaxError(SpecError):
    """Expression text does not conform to the grammar."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class ExprDomainError(NumericalError):
    """Evaluation hit a domain violation (log of nonpositive, division by zero, ...)."""

    def __init__(self, message, subexpr=None):
        self.subexpr = subexpr
        if subexpr is not None:
            message = f"{message} in subexpression '{subexpr}'"
        super().__init__(message)
