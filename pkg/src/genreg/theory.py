"""Theory-driven quantities: tuning parameters, eigenvalue curves and RE checks.

All formulas here use the ``mean_sumsq`` loss convention of the error bounds,
``(1/n)||y - X beta||^2``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike

from genreg.errors import ValidationError
from genreg.graph import Graph, graph_spectra, incidence_matrix, laplacian
from genreg.numerics import (
    Array,
    CovarianceMatrix,
    derive_seeds,
    make_rng,
    max_eigenvalue_sym,
    min_eigenvalue_sym,
    sqrtm_psd,
)

logger = logging.getLogger(__name__)

# Scale of Sigma in the curve gamma_min(Sigma / 64 + lambda2 * L).
CURVE_SCALE = 1.0 / 64.0


def _matrix(Sigma: CovarianceMatrix | ArrayLike) -> Array:
    if isinstance(Sigma, CovarianceMatrix):
        return Sigma.matrix
    M = np.asarray(Sigma, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"covariance must be square, got shape {M.shape}")
    return M


# =============================================================================
# Tuning parameters
# =============================================================================


@dataclass(frozen=True)
class TheoryTuning:
    """Theoretical ``lambda1`` and the largest admissible ``lambda2``.

    ``lambda2`` is ``inf`` when ``||D beta*||_inf = 0`` and ``lambda1 > 0``:
    any quadratic strength is then admissible.
    """

    lambda1: float
    lambda2: float
    sigma: float
    gmax_sigma: float
    rho: float
    n: int
    p: int
    tv_linf: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2 if math.isfinite(self.lambda2) else "inf",
            "sigma": self.sigma,
            "gmax_sigma": self.gmax_sigma,
            "rho": self.rho,
            "n": self.n,
            "p": self.p,
            "tv_linf": self.tv_linf,
            "loss_convention": "mean_sumsq",
        }


def theory_lambda1(sigma: float, gmax_sigma: float, rho: float, n: int, p: int) -> float:
    """``32 sigma rho sqrt(gamma_max(Sigma) log(p) / n)``."""
    if sigma < 0:
        raise ValidationError(f"noise sd must be >= 0, got {sigma}")
    if n < 1 or p < 2:
        raise ValidationError(f"need n >= 1 and p >= 2, got n={n}, p={p}")
    return 32.0 * sigma * rho * math.sqrt(gmax_sigma * math.log(p) / n)


def theory_lambda2(lambda1: float, tv_linf: float) -> float:
    """``lambda1 / (8 ||D beta*||_inf)``, the largest admissible ``lambda2``."""
    if lambda1 == 0:
        return 0.0
    if tv_linf <= 0:
        return math.inf
    return lambda1 / (8.0 * tv_linf)


def theoretical_lambdas(
    sigma: float,
    Sigma: CovarianceMatrix | ArrayLike,
    g: Graph,
    n: int,
    beta_star: ArrayLike | None = None,
    tv_linf: float | None = None,
) -> TheoryTuning:
    """Tuning parameters under which the GEN error bounds hold.

    Args:
        sigma: Noise standard deviation.
        Sigma: Row covariance of the design.
        g: Graph of the penalty.
        n: Sample size.
        beta_star: True signal, used for ``||D beta*||_inf``.
        tv_linf: ``||D beta*||_inf`` given directly, overriding ``beta_star``.

    Raises:
        ValidationError: If ``sigma < 0``, ``n < 1``, ``p < 2`` or neither
            ``beta_star`` nor ``tv_linf`` is given.

    Examples:
        >>> round(theoretical_lambdas(1.0, np.eye(4), star_graph(4), 100, tv_linf=1).lambda1, 4)
        3.2629
    """
    M = _matrix(Sigma)
    if M.shape[0] != g.p:
        raise ValidationError(f"covariance is for p={M.shape[0]}, graph has p={g.p}")
    if tv_linf is None:
        if beta_star is None:
            raise ValidationError("either beta_star or tv_linf is required")
        diffs = incidence_matrix(g) @ np.asarray(beta_star, dtype=float)
        tv_linf = float(np.abs(diffs).max(initial=0.0))
    gmax = max_eigenvalue_sym(M)
    rho = graph_spectra(g).rho
    lambda1 = theory_lambda1(sigma, gmax, rho, n, g.p)
    return TheoryTuning(
        lambda1=lambda1,
        lambda2=theory_lambda2(lambda1, tv_linf),
        sigma=float(sigma),
        gmax_sigma=gmax,
        rho=rho,
        n=n,
        p=g.p,
        tv_linf=float(tv_linf),
    )


# =============================================================================
# Minimum-eigenvalue curve
# =============================================================================


@dataclass(frozen=True, eq=False)
class EigenCurve:
    """``gamma_min(Sigma / 64 + lambda2 L)`` over a ``lambda2`` grid."""

    lambda2: Array
    values: Array

    @property
    def linear_reference(self) -> Array:
        return CURVE_SCALE * self.lambda2

    @property
    def sqrt_reference(self) -> Array:
        return CURVE_SCALE * np.sqrt(self.lambda2)

    @property
    def above_linear(self) -> Array:
        return self.values >= self.linear_reference

    @property
    def above_sqrt(self) -> Array:
        return self.values >= self.sqrt_reference

    def is_nondecreasing(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.values) >= -tol))

    def is_concave(self, tol: float = 1e-9) -> bool:
        """Discrete concavity: every chord lies below the curve, for any spacing."""
        x, y = self.lambda2, self.values
        for i in range(1, len(x) - 1):
            w = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1])
            if y[i] < (1 - w) * y[i - 1] + w * y[i + 1] - tol:
                return False
        return True

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["lambda2", "gmin", "gmin_ge_lambda2_over64", "gmin_ge_sqrt_lambda2_over64"]
            )
            for lam, value, lin, sq in zip(
                self.lambda2, self.values, self.above_linear, self.above_sqrt, strict=True
            ):
                writer.writerow(
                    [
                        repr(float(lam)),
                        repr(float(value)),
                        str(bool(lin)).lower(),
                        str(bool(sq)).lower(),
                    ]
                )
        return path


def min_eigen_curve(
    Sigma: CovarianceMatrix | ArrayLike, L: ArrayLike, lambda2_grid: ArrayLike
) -> EigenCurve:
    """Smallest eigenvalue of ``Sigma / 64 + lambda2 L`` at each grid point.

    Raises:
        ValidationError: If the grid is empty, negative or not ascending, or
            ``Sigma`` and ``L`` differ in size.
    """
    M = _matrix(Sigma)
    L = np.asarray(L, dtype=float)
    if L.shape != M.shape:
        raise ValidationError(f"Sigma is {M.shape} but L is {L.shape}")
    grid = np.asarray(lambda2_grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValidationError("lambda2 grid is empty")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise ValidationError("lambda2 grid must be nonnegative and ascending")
    values = np.array([min_eigenvalue_sym(CURVE_SCALE * M + lam * L) for lam in grid])
    # gamma_min of a PSD sum is >= 0; eigensolver noise may dip below.
    values = np.clip(values, 0.0, None)
    return EigenCurve(lambda2=grid, values=values)


# =============================================================================
# Restricted eigenvalue checks
# =============================================================================


def sample_directions(g: Graph, count: int, rng: int | np.random.Generator) -> Array:
    """Unit directions cycling through three families.

    - sparse jumps: ``D^+`` applied to a vector with a few +-1 edges
    - smooth: ``(L + I)^-1`` applied to Gaussian noise
    - dense: Gaussian noise

    Returns:
        A ``count x p`` array with unit-norm rows.
    """
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    rng = make_rng(rng)
    p = g.p
    pinv = graph_spectra(g).pinv_incidence
    smoother = np.linalg.inv(laplacian(g).astype(float) + np.eye(p))
    directions = np.empty((count, p))
    for i in range(count):
        family = i % 3
        if family == 0 and g.m > 0:
            jumps = np.zeros(g.m)
            picked = rng.choice(g.m, size=min(g.m, int(rng.integers(1, 4))), replace=False)
            jumps[picked] = rng.choice([-1.0, 1.0], size=picked.size)
            v = pinv @ jumps + rng.normal() * np.ones(p) / math.sqrt(p)
        elif family == 1:
            v = smoother @ rng.standard_normal(p)
        else:
            v = rng.standard_normal(p)
        norm = np.linalg.norm(v)
        directions[i] = v / norm if norm > 0 else np.ones(p) / math.sqrt(p)
    return directions


@dataclass(frozen=True, eq=False)
class RESetup:
    """Design-independent pieces of the restricted eigenvalue inequality."""

    root: Array
    incidence: Array
    gmax: float
    rho: float
    n_components: int


def re_lower_bound(v: ArrayLike, n: int, consts: RESetup) -> float:
    """Right-hand side of the restricted eigenvalue inequality for direction ``v``."""
    v = np.asarray(v, dtype=float)
    p = v.shape[0]
    return (
        0.25 * float(np.linalg.norm(consts.root @ v))
        - 3.0 * math.sqrt(consts.gmax * consts.n_components / n) * float(np.linalg.norm(v))
        - 6.0 * math.sqrt(2.0) * consts.rho * math.sqrt(consts.gmax * math.log(p) / n)
        * float(np.abs(consts.incidence @ v).sum())
    )


def re_setup(Sigma: CovarianceMatrix | ArrayLike, g: Graph) -> RESetup:
    """Precompute the matrices and constants of the RE inequality."""
    M = _matrix(Sigma)
    spectra = graph_spectra(g)
    return RESetup(
        root=sqrtm_psd(M),
        incidence=incidence_matrix(g),
        gmax=max_eigenvalue_sym(M),
        rho=spectra.rho,
        n_components=spectra.n_components,
    )


def _trial(args: tuple[Graph, int, int, int, RESetup]) -> int:
    g, n, n_directions, seed, consts = args
    rng = make_rng(seed)
    X = rng.standard_normal((n, g.p)) @ consts.root
    directions = sample_directions(g, n_directions, rng)
    passed = 0
    for v in directions:
        lhs = float(np.linalg.norm(X @ v)) / math.sqrt(n)
        if lhs >= re_lower_bound(v, n, consts):
            passed += 1
    return passed


def re_condition_trial(
    Sigma: CovarianceMatrix | ArrayLike,
    g: Graph,
    n: int,
    n_trials: int = 50,
    n_directions: int = 20,
    seed: int = 0,
    jobs: int = 1,
) -> float:
    """Monte Carlo estimate of how often the RE inequality holds.

    For each trial, draws ``X`` with i.i.d. ``N(0, Sigma)`` rows and checks

        ||X v|| / sqrt(n) >= ||Sigma^1/2 v|| / 4
                             - 3 sqrt(gmax * nc / n) ||v||
                             - 6 sqrt(2) rho sqrt(gmax log(p) / n) ||D v||_1

    for ``n_directions`` sampled directions. Trial ``t`` uses seed
    ``seed + t``.

    Returns:
        Fraction of (trial, direction) pairs satisfying the inequality.

    Raises:
        ValidationError: If ``n < 10`` or the graph has fewer than 2 edges.
    """
    M = _matrix(Sigma)
    if n < 10:
        raise ValidationError(f"RE check needs n >= 10, got {n}")
    if g.m < 2:
        raise ValidationError(f"RE check needs at least 2 edges, got {g.m}")
    if M.shape[0] != g.p:
        raise ValidationError(f"covariance is for p={M.shape[0]}, graph has p={g.p}")
    if n_trials < 1 or n_directions < 1:
        raise ValidationError("n_trials and n_directions must be >= 1")
    consts = re_setup(M, g)
    tasks = [(g, n, n_directions, s, consts) for s in derive_seeds(seed, n_trials)]
    if jobs > 1:
        passes = Parallel(n_jobs=jobs)(delayed(_trial)(task) for task in tasks)
    else:
        passes = [_trial(task) for task in tasks]
    fraction = sum(passes) / (n_trials * n_directions)
    logger.info(
        "RE inequality held for %.4f of %d pairs (n=%d, p=%d)",
        fraction, n_trials * n_directions, n, g.p,
    )
    return fraction
