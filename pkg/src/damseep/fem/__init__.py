from .kernels import BACKEND, get_backend
from .solver import (
    SolverSettings,
    SolveResult,
    assemble_stiffness,
    element_conductance,
    node_conditions,
    solve_unconfined,
)

__all__ = [
    "BACKEND",
    "get_backend",
    "SolverSettings",
    "SolveResult",
    "assemble_stiffness",
    "element_conductance",
    "node_conditions",
    "solve_unconfined",
]
