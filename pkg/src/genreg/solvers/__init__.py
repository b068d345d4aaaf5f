"""Solvers for the box-constrained dual of the augmented l1 problem.

Coordinate descent and the interior point method work on the dual QP;
ADMM works on the primal split and serves as a reference.
"""

from genreg.solvers.admm import solve_admm
from genreg.solvers.base import (
    DualProblem,
    DualSolution,
    FitResult,
    SolverKind,
    SolverOptions,
    box_project,
    build_dual,
    dual_value,
    least_squares,
    optimality_report,
    recover_primal,
)
from genreg.solvers.coordinate_descent import solve_cd
from genreg.solvers.dispatch import fit
from genreg.solvers.interior_point import solve_ip

__all__ = [
    "DualProblem",
    "DualSolution",
    "FitResult",
    "SolverKind",
    "SolverOptions",
    "box_project",
    "build_dual",
    "dual_value",
    "fit",
    "least_squares",
    "optimality_report",
    "recover_primal",
    "solve_admm",
    "solve_cd",
    "solve_ip",
]
