"""Small dense conic programming: builder front end and interior-point solver."""

from .program import (
    ConicProgram,
    ConicSolution,
    LinExpr,
    ProgramError,
    lift_hermitian,
    solve,
)
from .solver import (
    STATUS_INFEASIBLE,
    STATUS_MAX_ITER,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    RawSolution,
    SolverError,
    solve_raw,
)

__all__ = [
    "ConicProgram",
    "ConicSolution",
    "LinExpr",
    "ProgramError",
    "lift_hermitian",
    "solve",
    "solve_raw",
    "RawSolution",
    "SolverError",
    "STATUS_OPTIMAL",
    "STATUS_INFEASIBLE",
    "STATUS_UNBOUNDED",
    "STATUS_MAX_ITER",
]
