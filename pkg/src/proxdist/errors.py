"""Exception types shared across the package."""


class ContractViolationError(ValueError):
    """An argument breaks a documented precondition (dimension, sign, range)."""


class SolverFailureError(RuntimeError):
    """A solver diverged: non-finite values or an unusable linear system."""
