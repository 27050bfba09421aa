"""Exception hierarchy shared by all modules."""


class CaggError(Exception):
    """Base class for library errors."""


class ParameterError(CaggError, ValueError):
    """Invalid parameters or dimensions."""


class FieldDomainError(CaggError, ArithmeticError):
    """Arithmetic outside the field's domain (e.g. inverting zero)."""


class BudgetExceeded(CaggError, RuntimeError):
    """An exact computation would exceed the configured work budget."""


class RecoveryError(CaggError, RuntimeError):
    """Internal inconsistency: an aggregation step could not be completed.

    Under the construction guarantees this never happens, so seeing it
    indicates a bug rather than bad input.
    """
