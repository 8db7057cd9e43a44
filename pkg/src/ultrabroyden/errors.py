"""Exception hierarchy shared by all modules."""


class UltraError(Exception):
    """Base class for library errors."""


class ContextMismatch(UltraError, ValueError):
    """Operands live in different fields."""


class PrecisionError(UltraError, ZeroDivisionError):
    """Division by an element indistinguishable from zero.

    ``precision`` is the absolute precision of the offending divisor; the
    caller has to lift it before retrying.
    """

    def __init__(self, message, precision=None):
        super().__init__(message)
        self.precision = precision


class SingularResidueError(UltraError, ArithmeticError):
    """Reduction modulo the uniformizer is singular (not unimodular)."""


class InvertibilityError(UltraError, ArithmeticError):
    """The Sherman-Morrison denominator vanished at available precision."""


class BasinViolation(UltraError, ArithmeticError):
    """No admissible update index exists; the iterate left the basin."""


class AdmissibilityError(UltraError, ValueError):
    """Starting data does not satisfy the unimodular start conditions."""


class NonConvergence(UltraError, RuntimeError):
    """Iteration limit reached before the target valuation."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class UnderPrediction(UltraError, RuntimeError):
    """The predicted next valuation was too small and recovery failed."""


class IntervalMismatch(UltraError, AssertionError):
    """A computed precision interval differs from its step annotation."""


class ParseError(UltraError, ValueError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(message + where)
        self.line = line
        self.column = column
