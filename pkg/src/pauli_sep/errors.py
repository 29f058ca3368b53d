"""Exception types raised across the package."""


class PauliSepError(Exception):
    """Base class for all package errors."""


class DomainError(PauliSepError, ValueError):
    """Argument lies outside the admissible domain."""


class SingularityError(PauliSepError, ArithmeticError):
    """A Jacobian or coefficient matrix is numerically singular."""


class ConvergenceError(PauliSepError, ArithmeticError):
    """An iterative solver failed to converge."""


class IntegrationError(PauliSepError, ArithmeticError):
    """An ODE integration lost accuracy (drift, blow-up, zero crossing)."""


class ConstructionError(PauliSepError, ValueError):
    """An object violates its structural invariants at construction."""


class NotSeparableError(PauliSepError):
    """The supplied potential cannot be brought to separable form."""
