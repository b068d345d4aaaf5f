"""Single entry point: augment, solve, recover and certify."""

from __future__ import annotations

import logging
import time
import warnings

import numpy as np
from numpy.typing import ArrayLike

from genreg.errors import ConvergenceWarning
from genreg.penalty import PenaltySpec, augment
from genreg.solvers.admm import solve_admm
from genreg.solvers.base import (
    DualSolution,
    FitResult,
    SolverKind,
    SolverOptions,
    build_dual,
    least_squares,
    optimality_report,
    recover_primal,
)
from genreg.solvers.coordinate_descent import solve_cd
from genreg.solvers.interior_point import solve_ip

logger = logging.getLogger(__name__)


def fit(
    X: ArrayLike,
    y: ArrayLike,
    spec: PenaltySpec,
    options: SolverOptions | None = None,
) -> FitResult:
    """Fit a GEN-family estimator.

    The quadratic penalty is folded into the design, then the l1-only problem
    is solved by the selected solver. With ``lambda1 = 0`` or no l1 rows the
    problem is plain least squares and every solver returns ``X~^+ y~``.

    Args:
        X: ``n x p`` design.
        y: Response of length ``n``.
        spec: The penalty, in either loss convention.
        options: Solver choice and tolerances; ``SolverOptions()`` if omitted.

    Returns:
        The primal estimate with its dual point and optimality certificate.
        Non-convergence is reported through ``result.converged`` and a
        :class:`ConvergenceWarning`, never raised.

    Raises:
        ValidationError: On inconsistent dimensions or parameters.
        SolverError: If a numerical kernel fails.
    """
    options = options or SolverOptions()
    ap = augment(X, y, spec)
    kind = options.solver
    started = time.perf_counter()

    if ap.m1 == 0 or ap.lambda1 == 0:
        resolved = SolverKind.CD if kind is SolverKind.AUTO else kind
        beta = least_squares(ap, options.svd_tol)
        report = optimality_report(ap, beta)
        result = FitResult(
            beta_hat=beta,
            dual=DualSolution(u=np.zeros(ap.m1), iterations=0, converged=True),
            kkt_residual=report["kkt_residual"],
            duality_gap=0.0,
            solver=resolved,
            wall_time=time.perf_counter() - started,
            objective=ap.objective(beta),
        )
        logger.debug("no active l1 term; returned the least-squares solution")
        return result

    if kind is SolverKind.ADMM:
        return _finish(
            solve_admm(
                ap,
                rho_admm=options.rho_admm,
                tol=options.resolved_tol(kind),
                max_iter=options.resolved_max_iter(kind),
                init=options.warm_start,
                time_limit=options.time_limit,
            )
        )

    dp = build_dual(ap, options.svd_tol, warn=kind is not SolverKind.AUTO)
    if kind is SolverKind.AUTO:
        if dp.kernel_dim_xtilde > 0:
            logger.info(
                "augmented design has a %d-dimensional kernel; using admm",
                dp.kernel_dim_xtilde,
            )
            kind = SolverKind.ADMM
            return _finish(
                solve_admm(
                    ap,
                    rho_admm=options.rho_admm,
                    tol=options.resolved_tol(kind),
                    max_iter=options.resolved_max_iter(kind),
                    init=options.warm_start,
                    time_limit=options.time_limit,
                    dp=dp,
                )
            )
        kind = SolverKind.CD

    tol = options.resolved_tol(kind)
    max_iter = options.resolved_max_iter(kind)
    if kind is SolverKind.CD:
        dual = solve_cd(dp, tol, max_iter, options.warm_start, options.time_limit)
    else:
        dual = solve_ip(
            dp,
            tau=options.tau,
            alpha=options.alpha,
            gamma=options.gamma,
            mu_init=options.mu_init,
            tol=tol,
            max_iter=max_iter,
            init=options.warm_start,
            time_limit=options.time_limit,
        )
    beta = recover_primal(ap, dp, dual.u)
    elapsed = time.perf_counter() - started
    report = optimality_report(ap, beta, dual.u, dp)
    return _finish(
        FitResult(
            beta_hat=beta,
            dual=dual,
            kkt_residual=report["kkt_residual"],
            duality_gap=report["duality_gap"],
            solver=kind,
            wall_time=elapsed,
            objective=ap.objective(beta),
        )
    )


def _finish(result: FitResult) -> FitResult:
    if result.converged:
        logger.info(
            "%s converged in %d iterations (%.3fs, kkt %.2e, gap %.2e)",
            result.solver.value,
            result.iterations,
            result.wall_time,
            result.kkt_residual,
            result.duality_gap,
        )
    else:
        reason = "time limit" if result.dual.timed_out else "iteration limit"
        warnings.warn(
            f"{result.solver.value} stopped at its {reason} after "
            f"{result.iterations} iterations",
            ConvergenceWarning,
            stacklevel=3,
        )
    return result
