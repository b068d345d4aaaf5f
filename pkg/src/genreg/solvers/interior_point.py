"""Primal-dual interior point method on the box-constrained dual.

The constraints ``|u| <= r`` are split as ``f1 = u - r <= 0`` and
``f2 = -u - r <= 0`` with multipliers ``mu1, mu2 >= 0``. Each iteration
takes a damped Newton step on the perturbed KKT residual

    r_dual = Qu - b + mu1 - mu2
    r_cent = (-mu1 * f1 - 1/t, -mu2 * f2 - 1/t)

after eliminating ``mu1`` and ``mu2`` so only an ``m1 x m1`` system is solved.
"""

from __future__ import annotations

import logging
import time

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from genreg.errors import SolverError, ValidationError
from genreg.numerics import Array
from genreg.solvers.base import DualProblem, DualSolution

logger = logging.getLogger(__name__)

# Fraction of the positivity-limited step actually taken.
STEP_FRACTION = 0.99

# Starting points closer than this fraction of the radius to the wall are pulled in.
INTERIOR_MARGIN = 0.99

MAX_BACKTRACK = 60


def _residual(
    Q: Array, b: Array, radii: Array, u: Array, mu1: Array, mu2: Array, t: float
) -> tuple[Array, Array, Array]:
    f1 = u - radii
    f2 = -u - radii
    r_dual = Q @ u - b + mu1 - mu2
    r_c1 = -mu1 * f1 - 1.0 / t
    r_c2 = -mu2 * f2 - 1.0 / t
    return r_dual, r_c1, r_c2


def _norm(parts: tuple[Array, Array, Array]) -> float:
    return float(np.sqrt(sum(float(part @ part) for part in parts)))


def solve_ip(
    dp: DualProblem,
    tau: float = 10.0,
    alpha: float = 0.01,
    gamma: float = 0.5,
    mu_init: float = 1.0,
    tol: float = 1e-4,
    max_iter: int = 200,
    init: ArrayLike | None = None,
    time_limit: float | None = None,
) -> DualSolution:
    """Minimize ``(1/2) u'Qu - b'u`` over the box with a barrier method.

    Args:
        dp: The dual problem. Every radius must be strictly positive.
        tau: Barrier growth factor, ``t = 2 * tau * m1 / eta``.
        alpha: Sufficient-decrease constant of the line search.
        gamma: Backtracking shrink factor.
        mu_init: Initial value of every multiplier.
        tol: Stop once the dual residual norm and the surrogate gap ``eta``
            are both at most ``tol``.
        max_iter: Maximum number of Newton steps.
        init: Starting point, pulled strictly inside the box. Zeros by default.
        time_limit: Wall-clock budget in seconds.

    Returns:
        The dual solution with its multipliers and final surrogate gap.

    Raises:
        ValidationError: If a box radius is not positive or a constant is out
            of range.
        SolverError: If the reduced Newton system is singular.
    """
    if not tau > 1:
        raise ValidationError(f"tau must be > 1, got {tau}")
    if not (0 < alpha < 1 and 0 < gamma < 1):
        raise ValidationError(f"alpha and gamma must be in (0, 1), got {alpha}, {gamma}")
    if not mu_init > 0:
        raise ValidationError(f"mu_init must be > 0, got {mu_init}")
    m = dp.m1
    radii = dp.box
    if m == 0:
        return DualSolution(u=np.zeros(0), iterations=0, converged=True, surrogate_gap=0.0)
    if np.any(radii <= 0):
        raise ValidationError("interior point needs strictly positive box radii")

    Q, b = dp.Q, dp.b
    if init is None:
        u = np.zeros(m)
    else:
        limit = INTERIOR_MARGIN * radii
        u = np.clip(np.asarray(init, dtype=float), -limit, limit)
    mu1 = np.full(m, float(mu_init))
    mu2 = np.full(m, float(mu_init))

    started = time.perf_counter()
    converged = timed_out = False
    eta = float("inf")
    steps = 0
    while True:
        f1 = u - radii
        f2 = -u - radii
        eta = float(-(f1 @ mu1) - (f2 @ mu2))
        t = 2.0 * tau * m / eta
        residual = _residual(Q, b, radii, u, mu1, mu2, t)
        if np.linalg.norm(residual[0]) <= tol and eta <= tol:
            converged = True
            break
        if steps == max_iter:
            break

        d1 = mu1 / f1
        d2 = mu2 / f2
        H = Q - np.diag(d1) - np.diag(d2)
        rhs = -(Q @ u - b - 1.0 / (t * f1) + 1.0 / (t * f2))
        try:
            du = scipy.linalg.solve(H, rhs, assume_a="sym")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"singular Newton system: {exc}", steps + 1) from exc
        if not np.all(np.isfinite(du)):
            raise SolverError("Newton step is not finite", steps + 1)
        dmu1 = -(d1 * du + mu1 + 1.0 / (t * f1))
        dmu2 = -(-d2 * du + mu2 + 1.0 / (t * f2))

        # Largest step keeping the multipliers positive.
        s_max = 1.0
        for mu, dmu in ((mu1, dmu1), (mu2, dmu2)):
            shrinking = dmu < 0
            if np.any(shrinking):
                s_max = min(s_max, float(np.min(-mu[shrinking] / dmu[shrinking])))
        s = STEP_FRACTION * s_max

        for _ in range(MAX_BACKTRACK):
            u_new = u + s * du
            if np.all(u_new - radii < 0) and np.all(-u_new - radii < 0):
                break
            s *= gamma
        current = _norm(residual)
        for _ in range(MAX_BACKTRACK):
            candidate = _residual(Q, b, radii, u + s * du, mu1 + s * dmu1, mu2 + s * dmu2, t)
            if _norm(candidate) <= (1.0 - alpha * s) * current:
                break
            s *= gamma

        u = u + s * du
        mu1 = mu1 + s * dmu1
        mu2 = mu2 + s * dmu2
        steps += 1
        logger.debug("ip step %d: eta %.3e step %.3e", steps, eta, s)
        if time_limit is not None and time.perf_counter() - started > time_limit:
            timed_out = True
            break

    if not converged:
        logger.warning(
            "interior point stopped after %d steps (surrogate gap %.3e, tol %.1e)",
            steps, eta, tol,
        )
    return DualSolution(
        u=np.clip(u, -radii, radii),
        iterations=steps,
        converged=converged,
        surrogate_gap=eta,
        mu1=mu1,
        mu2=mu2,
        timed_out=timed_out,
    )
