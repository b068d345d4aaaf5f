"""Dual problem construction, result types and optimality certificates.

For ``(1/2)||y~ - X~ beta||^2 + sum_j r_j |(A beta)_j|`` with radii
``r = lambda1 * w``, the dual is the box-constrained QP

    minimize (1/2) u'Qu - b'u  subject to  |u_j| <= r_j

with ``Q = (A X~^+)(A X~^+)'`` and ``b = A X~^+ y~``, and the primal is
recovered as ``beta = X~^+ (y_check - (A X~^+)' u)``. Both are formed from
the truncated SVD of ``X~`` without materializing ``X~^+``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import scipy.optimize
from numpy.typing import ArrayLike

from genreg.errors import RankDeficientWarning, ValidationError
from genreg.numerics import DEFAULT_REL_TOL, Array, truncated_svd
from genreg.penalty import AugmentedProblem

logger = logging.getLogger(__name__)

# |(A beta)_j| at or below this is treated as zero when picking subgradients.
SUBGRADIENT_DEAD_ZONE = 1e-8


class SolverKind(Enum):
    """Available solvers; ``auto`` picks CD unless ``X~`` is rank deficient."""

    CD = "cd"
    IP = "ip"
    ADMM = "admm"
    AUTO = "auto"


_DEFAULT_TOL = {SolverKind.CD: 1e-4, SolverKind.IP: 1e-4, SolverKind.ADMM: 1e-3}
_DEFAULT_MAX_ITER = {SolverKind.CD: 20_000, SolverKind.IP: 200, SolverKind.ADMM: 20_000}


@dataclass(frozen=True, eq=False)
class SolverOptions:
    """Solver choice and tuning constants.

    ``tol`` and ``max_iter`` default per solver when left as ``None``: CD and
    IP stop at 1e-4 and ADMM at 1e-3.
    """

    solver: SolverKind = SolverKind.CD
    tol: float | None = None
    max_iter: int | None = None
    tau: float = 10.0
    alpha: float = 0.01
    gamma: float = 0.5
    mu_init: float = 1.0
    rho_admm: float = 1.0
    svd_tol: float = DEFAULT_REL_TOL
    time_limit: float | None = None
    warm_start: Array | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "solver", SolverKind(self.solver))
        if self.tol is not None and not self.tol > 0:
            raise ValidationError(f"tol must be > 0, got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tau > 1:
            raise ValidationError(f"tau must be > 1, got {self.tau}")
        if not 0 < self.alpha < 1:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0 < self.gamma < 1:
            raise ValidationError(f"gamma must be in (0, 1), got {self.gamma}")
        if not self.mu_init > 0:
            raise ValidationError(f"mu_init must be > 0, got {self.mu_init}")
        if not self.rho_admm > 0:
            raise ValidationError(f"rho_admm must be > 0, got {self.rho_admm}")

    @classmethod
    def benchmark_defaults(cls, solver: SolverKind | str = SolverKind.CD) -> SolverOptions:
        """Benchmark tolerances: 1e-4 for CD and IP, 1e-3 for ADMM."""
        return cls(solver=SolverKind(solver))

    @classmethod
    def precise(cls, solver: SolverKind | str = SolverKind.CD) -> SolverOptions:
        """Tight tolerances for verification runs."""
        kind = SolverKind(solver)
        max_iter = {SolverKind.IP: 500}.get(kind, 200_000)
        return cls(solver=kind, tol=1e-11, max_iter=max_iter)

    def resolved_tol(self, kind: SolverKind) -> float:
        return self.tol if self.tol is not None else _DEFAULT_TOL[kind]

    def resolved_max_iter(self, kind: SolverKind) -> int:
        return self.max_iter if self.max_iter is not None else _DEFAULT_MAX_ITER[kind]

    def describe(self) -> dict[str, Any]:
        return {
            "solver": self.solver.value,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "tau": self.tau,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "mu_init": self.mu_init,
            "rho_admm": self.rho_admm,
            "svd_tol": self.svd_tol,
            "time_limit": self.time_limit,
        }


@dataclass(frozen=True, eq=False)
class DualProblem:
    """Box-constrained dual QP plus the SVD pieces for primal recovery.

    Attributes:
        Q: ``m1 x m1`` PSD matrix.
        b: Linear term.
        box: Per-coordinate radii ``lambda1 * w``.
        kernel_dim_xtilde: Dimension of ``ker(X~)``.
        factor: ``G = A V S^-1`` so that ``Q = G G'``.
        response_coords: ``U' y~``.
        singular_values: Kept singular values ``S`` of ``X~``.
        right_vectors: Kept right singular vectors ``V'`` of ``X~``.
    """

    Q: Array
    b: Array
    box: Array
    kernel_dim_xtilde: int
    factor: Array
    response_coords: Array
    singular_values: Array
    right_vectors: Array

    @property
    def m1(self) -> int:
        return int(self.b.shape[0])

    def objective(self, u: ArrayLike) -> float:
        """Dual objective ``(1/2) u'Qu - b'u``."""
        u = np.asarray(u, dtype=float)
        return float(0.5 * u @ self.Q @ u - self.b @ u)


@dataclass(frozen=True, eq=False)
class DualSolution:
    """Output of a dual solver.

    Attributes:
        u: Dual point, always inside the box.
        iterations: Sweeps (CD), Newton steps (IP) or ADMM iterations.
        converged: Whether the stopping rule was met.
        last_step_norm: Final ``||u_k - u_{k-1}||`` (CD) or primal residual
            (ADMM).
        surrogate_gap: Final surrogate duality gap (IP).
        objective_trace: Dual objective after every CD sweep.
        mu1: Multipliers of ``u <= r`` (IP).
        mu2: Multipliers of ``-u <= r`` (IP).
        timed_out: Whether the time limit stopped the solver.
    """

    u: Array
    iterations: int
    converged: bool
    last_step_norm: float | None = None
    surrogate_gap: float | None = None
    objective_trace: list[float] = field(default_factory=list)
    mu1: Array | None = None
    mu2: Array | None = None
    timed_out: bool = False


@dataclass(frozen=True, eq=False)
class FitResult:
    """A solved GEN-family problem.

    Attributes:
        beta_hat: Primal estimate.
        dual: The dual solution it came from.
        kkt_residual: Stationarity violation of ``beta_hat``.
        duality_gap: Primal minus dual objective.
        solver: Solver that produced the result.
        wall_time: Seconds spent in dual construction, solve and recovery.
        objective: Augmented primal objective at ``beta_hat``.
    """

    beta_hat: Array
    dual: DualSolution
    kkt_residual: float
    duality_gap: float
    solver: SolverKind
    wall_time: float
    objective: float = float("nan")

    @property
    def converged(self) -> bool:
        return self.dual.converged

    @property
    def iterations(self) -> int:
        return self.dual.iterations

    def diagnostics(self) -> dict[str, Any]:
        """JSON-friendly summary written next to ``beta.csv``."""
        return {
            "solver": self.solver.value,
            "converged": bool(self.converged),
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
            "duality_gap": self.duality_gap,
            "objective": self.objective,
            "wall_time": self.wall_time,
            "timed_out": bool(self.dual.timed_out),
        }


# =============================================================================
# Construction
# =============================================================================


def build_dual(
    ap: AugmentedProblem, rel_tol: float = DEFAULT_REL_TOL, warn: bool = True
) -> DualProblem:
    """Form ``Q``, ``b`` and the box for the augmented problem.

    Args:
        ap: The augmented problem.
        rel_tol: Relative singular-value cutoff for ``X~^+``.
        warn: Emit a :class:`RankDeficientWarning` when ``ker(X~)`` is
            nontrivial. The dual then drops the constraint
            ``A'u in row(X~)`` and its solution is not guaranteed.
    """
    svd = truncated_svd(ap.x_tilde, rel_tol)
    kernel_dim = ap.p - svd.rank
    if kernel_dim > 0:
        message = (
            f"augmented design has a {kernel_dim}-dimensional kernel; solving the "
            "relaxed dual and returning the minimum-norm primal"
        )
        if warn:
            logger.warning(message)
            warnings.warn(message, RankDeficientWarning, stacklevel=2)
        else:
            logger.debug(message)
    G = (ap.l1_matrix @ svd.vt.T) / svd.s if svd.rank else np.zeros((ap.m1, 0))
    coords = svd.u.T @ ap.y_tilde
    Q = G @ G.T
    Q = (Q + Q.T) / 2.0
    b = G @ coords
    return DualProblem(
        Q=Q,
        b=b,
        box=ap.box.copy(),
        kernel_dim_xtilde=kernel_dim,
        factor=G,
        response_coords=coords,
        singular_values=svd.s,
        right_vectors=svd.vt,
    )


def box_project(x: ArrayLike, radius: ArrayLike) -> Any:
    """Clamp ``x`` to ``[-radius, radius]`` (elementwise for arrays)."""
    out = np.clip(x, -np.asarray(radius), np.asarray(radius))
    return float(out) if np.ndim(out) == 0 else out


def recover_primal(ap: AugmentedProblem, dp: DualProblem, u: ArrayLike) -> Array:
    """``beta = X~^+ (y_check - (A X~^+)' u)``, the kernel component set to 0."""
    u = np.asarray(u, dtype=float)
    if dp.singular_values.size == 0:
        return np.zeros(ap.p)
    coords = dp.response_coords - dp.factor.T @ u
    return dp.right_vectors.T @ (coords / dp.singular_values)


def least_squares(ap: AugmentedProblem, rel_tol: float = DEFAULT_REL_TOL) -> Array:
    """Minimum-norm least-squares solution ``X~^+ y~``."""
    svd = truncated_svd(ap.x_tilde, rel_tol)
    return svd.vt.T @ ((svd.u.T @ ap.y_tilde) / svd.s) if svd.rank else np.zeros(ap.p)


# =============================================================================
# Optimality certificates
# =============================================================================


def dual_value(ap: AugmentedProblem, dp: DualProblem, u: ArrayLike) -> float:
    """Lagrange dual function ``min_beta (1/2)||y~ - X~ beta||^2 + u'A beta``.

    Exact when ``A'u`` lies in the row space of ``X~`` (always, for a
    trivial kernel).
    """
    u = np.asarray(u, dtype=float)
    beta = recover_primal(ap, dp, u)
    residual = ap.y_tilde - ap.x_tilde @ beta
    return float(0.5 * residual @ residual + u @ (ap.l1_matrix @ beta))


def _min_subgradient_residual(
    grad: Array, A: Array, radii: Array, fixed: Array, free: Array, signs: Array
) -> float | None:
    """Solve ``min_s ||grad - A's||_inf`` over the valid subgradients as an LP."""
    base = grad - A[fixed].T @ (radii[fixed] * signs[fixed])
    n_free = int(free.sum())
    if n_free == 0:
        return float(np.abs(base).max(initial=0.0))
    A_free = A[free].T
    p = grad.shape[0]
    # variables: s_free (n_free), t; minimize t
    cost = np.zeros(n_free + 1)
    cost[-1] = 1.0
    ones = np.ones((p, 1))
    A_ub = np.block([[-A_free, -ones], [A_free, -ones]])
    b_ub = np.concatenate([-base, base])
    bounds = [(-r, r) for r in radii[free]] + [(0, None)]
    result = scipy.optimize.linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not result.success:
        logger.debug("subgradient LP failed: %s", result.message)
        return None
    return float(result.x[-1])


def optimality_report(
    ap: AugmentedProblem,
    beta: ArrayLike,
    u: ArrayLike | None = None,
    dp: DualProblem | None = None,
    dead_zone: float = SUBGRADIENT_DEAD_ZONE,
) -> dict[str, float]:
    """KKT residual and duality gap of a primal (and optional dual) point.

    The KKT residual is the smallest ``||X~'(y~ - X~ beta) - A's||_inf`` over
    subgradients ``s`` of the weighted l1 term at ``beta``. The duality gap
    needs ``u`` and is ``nan`` without it; ``dp`` saves rebuilding the SVD of
    ``X~`` for the dual function. The gap is signed: a clearly negative
    value means ``u`` is not dual feasible for the exact dual (nontrivial
    kernel of ``X~``), and callers compare ``abs(gap)`` with their tolerance.

    Returns:
        ``{"kkt_residual": ..., "duality_gap": ...}``
    """
    beta = np.asarray(beta, dtype=float)
    grad = ap.x_tilde.T @ (ap.y_tilde - ap.x_tilde @ beta)
    radii = ap.box
    if ap.m1 == 0 or ap.lambda1 == 0:
        kkt = float(np.abs(grad).max(initial=0.0))
    else:
        A = ap.l1_matrix
        activity = A @ beta
        free = np.abs(activity) <= dead_zone
        fixed = ~free
        signs = np.sign(activity)
        candidates = []
        if u is not None:
            s = np.where(fixed, radii * signs, np.clip(np.asarray(u, dtype=float), -radii, radii))
            candidates.append(float(np.abs(grad - A.T @ s).max(initial=0.0)))
        lp = _min_subgradient_residual(grad, A, radii, fixed, free, signs)
        if lp is not None:
            candidates.append(lp)
        kkt = min(candidates) if candidates else float("nan")

    gap = float("nan")
    if u is not None:
        u = box_project(np.asarray(u, dtype=float), radii) if ap.m1 else np.zeros(0)
        if dp is None:
            dp = build_dual(ap, warn=False)
        gap = ap.objective(beta) - dual_value(ap, dp, u)
    return {"kkt_residual": kkt, "duality_gap": gap}
