"""Separation of variables for the Pauli equation in moving curvilinear frames.

Modules
-------
specialfn   Jacobi elliptic functions and the complete integral K.
coords      The eleven separable coordinate families, eikonals, Staeckel matrices.
frame       Rotating, dilating, translating frames x = O L (z + v).
fields      Fields and potentials of a separable configuration; Maxwell residuals.
spinor      Pauli matrices, the propagator U(t) and the multiplier Q.
separation  Reduced equations, separated solutions and the Pauli residual.
catalog     Maxwell-compatible separable potentials and their frames.
cli         The ``pauli-separator`` command.
"""
from .coords import CoordSystem, Family, SplitClass, coord_system
from .errors import (ConstructionError, ConvergenceError, DomainError, IntegrationError,
                     NotSeparableError, PauliSepError, SingularityError)
from .fields import FCoefficients
from .frame import EulerFrame
from .grid import GridSpec
from .separation import Scenario, assemble_solution, pauli_residual, solve_separated

__version__ = "0.1.0"

__all__ = [
    "CoordSystem", "Family", "SplitClass", "coord_system",
    "PauliSepError", "DomainError", "SingularityError", "ConvergenceError", "IntegrationError",
    "ConstructionError", "NotSeparableError",
    "FCoefficients", "EulerFrame", "GridSpec",
    "Scenario", "solve_separated", "assemble_solution", "pauli_residual",
]
