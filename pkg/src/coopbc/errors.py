class ValidationError(ValueError):
    """Malformed input: bad table, unknown variable, dimension mismatch."""


class BudgetExceeded(RuntimeError):
    """A configured work or state-space limit was hit."""


class StateSpaceError(BudgetExceeded):
    pass


class InconsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""
