"""ADMM reference solver for the augmented l1 problem.

Splits ``z = A beta`` and iterates

    beta <- argmin (1/2)||y~ - X~ beta||^2 + (rho/2)||A beta - z + v||^2
    z    <- soft_threshold(A beta + v, lambda1 * w / rho)
    v    <- v + A beta - z

with one factorization of ``X~'X~ + rho A'A`` reused across iterations.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from genreg.errors import ValidationError
from genreg.numerics import Array, pseudoinverse, soft_threshold
from genreg.penalty import AugmentedProblem
from genreg.solvers.base import (
    DualProblem,
    DualSolution,
    FitResult,
    SolverKind,
    least_squares,
    optimality_report,
)

logger = logging.getLogger(__name__)

LOG_EVERY = 1000


def _beta_solver(M: Array) -> Callable[[Array], Array]:
    """Cholesky solve of ``M x = rhs``, pseudoinverse when ``M`` is singular."""
    try:
        factor = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        logger.debug("beta system is singular; falling back to the pseudoinverse")
        M_pinv = pseudoinverse(M)
        return lambda rhs: M_pinv @ rhs
    return lambda rhs: scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def solve_admm(
    ap: AugmentedProblem,
    rho_admm: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = 20_000,
    init: ArrayLike | None = None,
    time_limit: float | None = None,
    dp: DualProblem | None = None,
) -> FitResult:
    """Solve the augmented problem by ADMM and certify the result.

    Stops when the primal residual ``||A beta - z||`` and the dual residual
    ``rho ||A'(z - z_prev)||`` fall below the usual absolute/relative
    thresholds, both scaled by ``tol``.

    Args:
        ap: The augmented problem.
        rho_admm: Augmented Lagrangian penalty.
        tol: Absolute and relative stopping tolerance.
        max_iter: Maximum number of iterations.
        init: Optional starting dual point ``u``; ``v`` starts at ``u / rho``.
        time_limit: Wall-clock budget in seconds.
        dp: Dual problem for the duality gap, built on demand.

    Returns:
        A :class:`FitResult` whose dual point is ``rho * v`` clipped to the box.
    """
    if not rho_admm > 0:
        raise ValidationError(f"rho_admm must be > 0, got {rho_admm}")
    if not tol > 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    started = time.perf_counter()
    radii = ap.box
    m, p = ap.m1, ap.p

    if m == 0 or ap.lambda1 == 0:
        beta = least_squares(ap)
        dual = DualSolution(u=np.zeros(m), iterations=0, converged=True, last_step_norm=0.0)
        report = optimality_report(ap, beta)
        return FitResult(
            beta_hat=beta,
            dual=dual,
            kkt_residual=report["kkt_residual"],
            duality_gap=0.0,
            solver=SolverKind.ADMM,
            wall_time=time.perf_counter() - started,
            objective=ap.objective(beta),
        )

    A = ap.l1_matrix
    X = ap.x_tilde
    Xty = X.T @ ap.y_tilde
    solve = _beta_solver(X.T @ X + rho_admm * (A.T @ A))

    if init is None:
        v = np.zeros(m)
    else:
        v = np.clip(np.asarray(init, dtype=float), -radii, radii) / rho_admm
    z = np.zeros(m)
    beta = np.zeros(p)
    threshold = radii / rho_admm
    converged = timed_out = False
    r_norm = float("inf")
    iteration = 0
    for iteration in range(1, max_iter + 1):
        beta = solve(Xty + rho_admm * (A.T @ (z - v)))
        Ab = A @ beta
        z_old = z
        z = soft_threshold(Ab + v, threshold)
        v = v + Ab - z

        r_norm = float(np.linalg.norm(Ab - z))
        s_norm = float(rho_admm * np.linalg.norm(A.T @ (z - z_old)))
        scale = max(float(np.linalg.norm(Ab)), float(np.linalg.norm(z)))
        eps_pri = math.sqrt(m) * tol + tol * scale
        eps_dual = math.sqrt(p) * tol + tol * float(np.linalg.norm(rho_admm * (A.T @ v)))
        if iteration % LOG_EVERY == 0:
            logger.debug(
                "admm iteration %d: r %.3e (eps %.3e) s %.3e (eps %.3e)",
                iteration, r_norm, eps_pri, s_norm, eps_dual,
            )
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break
        if time_limit is not None and time.perf_counter() - started > time_limit:
            timed_out = True
            break

    if not converged:
        logger.warning(
            "admm stopped after %d iterations (primal residual %.3e)", iteration, r_norm
        )
    elapsed = time.perf_counter() - started
    u = np.clip(rho_admm * v, -radii, radii)
    dual = DualSolution(
        u=u,
        iterations=iteration,
        converged=converged,
        last_step_norm=r_norm,
        timed_out=timed_out,
    )
    report = optimality_report(ap, beta, u, dp)
    return FitResult(
        beta_hat=beta,
        dual=dual,
        kkt_residual=report["kkt_residual"],
        duality_gap=report["duality_gap"],
        solver=SolverKind.ADMM,
        wall_time=elapsed,
        objective=ap.objective(beta),
    )
