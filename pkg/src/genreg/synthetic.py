"""Synthetic graph-aligned signals, simulated designs and resampling studies.

Signals are built so their edge statistics (``||D beta||_0``,
``||D beta||_1`` and ``||D beta||_inf``) are known exactly from the
:class:`SignalSpec`. A study draws correlated Gaussian designs, tunes every
estimator on held-out data, refits and reports estimation and prediction
errors on a test set.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike

from genreg.errors import (
    ConvergenceWarning,
    GenRegError,
    RankDeficientWarning,
    ValidationError,
)
from genreg.graph import Graph, GraphKind, incidence_matrix
from genreg.model_selection import CVPlan, grid_search_cv, holdout_search
from genreg.numerics import Array, CovarianceMatrix, derive_seeds, make_rng, sqrtm_psd
from genreg.penalty import LossConvention, Preset, make_estimator
from genreg.solvers import SolverKind, SolverOptions, fit

logger = logging.getLogger(__name__)

# |(D beta)_j| at or below this counts as zero.
ZERO_THRESHOLD = 1e-12


# =============================================================================
# Signals
# =============================================================================


class SignalFamily(Enum):
    """Parametric signal families."""

    PIECEWISE_CONSTANT = "piecewise_constant"
    SMOOTH_RAMP = "smooth_ramp"
    MIXED = "mixed"
    BARBELL_LEVELS = "barbell_levels"
    SPARSE_BUMP = "sparse_bump"


@dataclass(frozen=True)
class SignalSpec:
    """Declared shape of a signal.

    Attributes:
        family: Which construction to use.
        target_tv: Desired ``||D beta||_1`` (ignored by ``barbell_levels``,
            whose total variation is ``|levels[1] - levels[0]|``).
        n_jumps: Number of jump edges (``piecewise_constant``, ``mixed``).
        ramp_edges: Edges crossed by the ramp on a chain; ``None`` picks a
            default (all edges for ``smooth_ramp``, a quarter for ``mixed``).
        ramp_share: Fraction of ``target_tv`` carried by the ramp in ``mixed``.
        levels: Clique values ``(a, b)`` for ``barbell_levels``.
        support: Width of the ``sparse_bump`` support; ``None`` means ``p // 5``.
        spike: Height of an optional isolated spike for ``sparse_bump``.
        base_level: Constant added to the whole signal.
    """

    family: SignalFamily
    target_tv: float = 15.0
    n_jumps: int = 3
    ramp_edges: int | None = None
    ramp_share: float = 0.5
    levels: tuple[float, float] = (20.0, 5.0)
    support: int | None = None
    spike: float = 0.0
    base_level: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", SignalFamily(self.family))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if not self.target_tv >= 0:
            raise ValidationError(f"target_tv must be >= 0, got {self.target_tv}")
        if self.n_jumps < 0:
            raise ValidationError(f"n_jumps must be >= 0, got {self.n_jumps}")
        if not 0 < self.ramp_share < 1:
            raise ValidationError(f"ramp_share must be in (0, 1), got {self.ramp_share}")
        if self.spike < 0:
            raise ValidationError(f"spike must be >= 0, got {self.spike}")

    @classmethod
    def staircase(cls, n_jumps: int = 3, target_tv: float = 15.0) -> SignalSpec:
        return cls(SignalFamily.PIECEWISE_CONSTANT, target_tv=target_tv, n_jumps=n_jumps)

    @classmethod
    def ramp(cls, target_tv: float = 15.0, ramp_edges: int | None = None) -> SignalSpec:
        return cls(SignalFamily.SMOOTH_RAMP, target_tv=target_tv, ramp_edges=ramp_edges)

    @classmethod
    def mixed(cls, n_jumps: int = 3, target_tv: float = 15.0) -> SignalSpec:
        return cls(SignalFamily.MIXED, target_tv=target_tv, n_jumps=n_jumps)

    def describe(self) -> dict[str, Any]:
        return {
            "family": self.family.value,
            "target_tv": self.target_tv,
            "n_jumps": self.n_jumps,
            "ramp_edges": self.ramp_edges,
            "ramp_share": self.ramp_share,
            "levels": list(self.levels),
            "support": self.support,
            "spike": self.spike,
            "base_level": self.base_level,
        }


@dataclass(frozen=True)
class SignalStats:
    """Edge and vertex statistics of a signal.

    Attributes:
        tv_l0: Number of nonzero edge differences.
        tv_l1: Sum of absolute edge differences.
        tv_linf: Largest absolute edge difference.
        lq_sum: ``q -> sum_j |(D beta)_j|^q`` for each requested ``q``.
        sparsity: Number of nonzero entries of ``beta``.
    """

    tv_l0: int
    tv_l1: float
    tv_linf: float
    lq_sum: dict[float, float] = field(default_factory=dict)
    sparsity: int = 0

    def as_dict(self) -> dict[str, Any]:
        return {
            "tv_l0": self.tv_l0,
            "tv_l1": self.tv_l1,
            "tv_linf": self.tv_linf,
            "lq_sum": {str(q): v for q, v in self.lq_sum.items()},
            "sparsity": self.sparsity,
        }


@dataclass(frozen=True)
class _Construction:
    beta: Array
    tv_l0: int
    tv_l1: float
    tv_linf: float


def _is_path_like(g: Graph) -> bool:
    return g.kind is GraphKind.CHAIN or (g.kind is GraphKind.GRID and len(g.shape) == 1)


def _spread(count: int, lo: int, hi: int) -> list[int]:
    """``count`` distinct, evenly spaced integers strictly inside ``(lo - 1, hi)``."""
    span = hi - lo
    return [lo + ((i + 1) * span) // (count + 1) for i in range(count)]


def _chain_jumps(p: int, edges: list[int], height: float) -> Array:
    """Staircase rising by ``height`` across each listed chain edge."""
    beta = np.zeros(p)
    for e in edges:
        beta[e + 1 :] += height
    return beta


def _chain_ramp(p: int, first_edge: int, n_edges: int, step: float) -> Array:
    """Flat, then rising by ``step`` across ``n_edges`` edges, then flat."""
    position = np.clip(np.arange(p) - first_edge, 0, n_edges)
    return step * position.astype(float)


def _construct_chain(g: Graph, spec: SignalSpec) -> _Construction:
    p, m = g.p, g.m
    tv = float(spec.target_tv)
    family = spec.family
    if family is SignalFamily.PIECEWISE_CONSTANT:
        k = spec.n_jumps
        if not 1 <= k <= m:
            raise ValidationError(f"n_jumps must be in [1, {m}], got {k}")
        height = tv / k
        beta = _chain_jumps(p, _spread(k, 0, m), height)
        return _Construction(beta, k if tv > 0 else 0, tv, height)

    if family is SignalFamily.SMOOTH_RAMP:
        width = m if spec.ramp_edges is None else spec.ramp_edges
        if not 1 <= width <= m:
            raise ValidationError(f"ramp_edges must be in [1, {m}], got {width}")
        step = tv / width
        first = (m - width) // 2
        return _Construction(_chain_ramp(p, first, width, step), width if tv > 0 else 0, tv, step)

    if family is SignalFamily.MIXED:
        # Jumps live in the first half of the edges, the ramp in the second.
        k = spec.n_jumps
        half = m // 2
        rest = m - half
        width = max(1, rest // 2) if spec.ramp_edges is None else spec.ramp_edges
        if not 1 <= k <= half:
            raise ValidationError(f"mixed signal needs 1 <= n_jumps <= {half}, got {k}")
        if not 1 <= width <= rest:
            raise ValidationError(f"mixed signal needs 1 <= ramp_edges <= {rest}, got {width}")
        jump_height = tv * (1.0 - spec.ramp_share) / k
        step = tv * spec.ramp_share / width
        first = half + (rest - width) // 2
        beta = _chain_jumps(p, _spread(k, 0, half), jump_height)
        beta += _chain_ramp(p, first, width, step)
        nonzero = (k + width) if tv > 0 else 0
        return _Construction(beta, nonzero, tv, max(jump_height, step))

    if family is SignalFamily.SPARSE_BUMP:
        width = spec.support if spec.support is not None else max(1, p // 5)
        bump_tv = tv - 2.0 * spec.spike
        if bump_tv <= 0:
            raise ValidationError("sparse_bump needs target_tv > 2 * spike")
        start = (p - width) // 2
        reserved = 3 if spec.spike > 0 else 1
        if width < 1 or start < reserved or start + width > p - 1:
            raise ValidationError(f"sparse_bump support {width} does not fit in p={p}")
        half_width = math.ceil(width / 2)
        height = bump_tv / (2 * half_width)
        offsets = np.arange(width)
        beta = np.zeros(p)
        beta[start : start + width] = height * np.minimum(offsets + 1, width - offsets)
        nonzero = 2 * half_width
        linf = height
        if spec.spike > 0:
            beta[1] = spec.spike
            nonzero += 2
            linf = max(linf, spec.spike)
        return _Construction(beta, nonzero, tv, linf)

    raise ValidationError(f"signal family '{family.value}' is not defined on a chain")


def _construct_grid(g: Graph, spec: SignalSpec) -> _Construction:
    if len(g.shape) != 2:
        raise ValidationError(f"grid signals need a 2d grid, got shape {g.shape}")
    rows, cols = g.shape
    tv = float(spec.target_tv)
    i_index = np.arange(g.p) // cols
    j_index = np.arange(g.p) % cols
    family = spec.family

    def island(k: int, max_rows: int, height_tv: float) -> tuple[Array, float]:
        # An a x b corner rectangle has a + b boundary edges.
        a = math.ceil(k / 2)
        b = k - a
        if k < 2 or a > max_rows or b > cols - 1:
            raise ValidationError(
                f"cannot place a corner island with {k} boundary edges in a {rows}x{cols} grid"
            )
        height = height_tv / k
        inside = (i_index < a) & (j_index < b)
        return np.where(inside, height, 0.0), height

    if family is SignalFamily.PIECEWISE_CONSTANT:
        beta, height = island(spec.n_jumps, rows - 1, tv)
        return _Construction(beta, spec.n_jumps if tv > 0 else 0, tv, height)

    if family is SignalFamily.SMOOTH_RAMP:
        if rows < 2:
            raise ValidationError("a ramp along axis 0 needs at least 2 rows")
        crossed = (rows - 1) * cols
        step = tv / crossed
        return _Construction(step * i_index.astype(float), crossed if tv > 0 else 0, tv, step)

    if family is SignalFamily.MIXED:
        # Island in the top rows, ramp starting at row ``split``.
        split = rows // 2
        ramp_rows = rows - 1 - split
        if split < 1 or ramp_rows < 1:
            raise ValidationError(f"mixed grid signal needs at least 3 rows, got {rows}")
        beta, height = island(spec.n_jumps, split, tv * (1.0 - spec.ramp_share))
        crossed = ramp_rows * cols
        step = tv * spec.ramp_share / crossed
        beta = beta + step * np.clip(i_index - split, 0, None).astype(float)
        nonzero = (spec.n_jumps + crossed) if tv > 0 else 0
        return _Construction(beta, nonzero, tv, max(height, step))

    raise ValidationError(f"signal family '{family.value}' is not defined on a grid")


def _construct_barbell(g: Graph, spec: SignalSpec) -> _Construction:
    if spec.family is not SignalFamily.BARBELL_LEVELS:
        raise ValidationError(f"signal family '{spec.family.value}' is not defined on a barbell")
    k, length = g.shape
    a, b = spec.levels
    beta = np.full(g.p, a)
    beta[g.p - k :] = b
    steps = np.arange(1, length)
    beta[k : k - 1 + length] = a + (b - a) * steps / length
    diff = abs(b - a)
    return _Construction(beta, length if diff > 0 else 0, diff, diff / length)


def _construct(g: Graph, spec: SignalSpec) -> _Construction:
    if spec.family is SignalFamily.BARBELL_LEVELS or g.kind is GraphKind.BARBELL:
        if g.kind is not GraphKind.BARBELL:
            raise ValidationError("barbell_levels needs a barbell graph")
        built = _construct_barbell(g, spec)
    elif _is_path_like(g):
        built = _construct_chain(g, spec)
    elif g.kind is GraphKind.GRID:
        built = _construct_grid(g, spec)
    else:
        raise ValidationError(f"no signal constructions for {g.kind.value} graphs")
    if spec.base_level:
        built = _Construction(built.beta + spec.base_level, built.tv_l0, built.tv_l1, built.tv_linf)
    return built


def make_signal(g: Graph, spec: SignalSpec) -> Array:
    """Build ``beta*`` on ``g`` with the declared edge statistics.

    Supported combinations: every family except ``barbell_levels`` on chains;
    ``piecewise_constant`` (corner island), ``smooth_ramp`` (along axis 0)
    and ``mixed`` on 2d grids; ``barbell_levels`` on barbells.

    Raises:
        ValidationError: If the signal cannot be realized on ``g`` (too many
            jumps, a support that does not fit, an unsupported graph kind).

    Examples:
        >>> beta = make_signal(chain_graph(110), SignalSpec.staircase(3, 15.0))
        >>> signal_stats(chain_graph(110), beta).tv_linf
        5.0
    """
    built = _construct(g, spec)
    logger.debug(
        "built %s signal on %s: tv_l0=%d tv_l1=%.6g",
        spec.family.value, g.kind.value, built.tv_l0, built.tv_l1,
    )
    return built.beta


def declared_stats(g: Graph, spec: SignalSpec) -> dict[str, float]:
    """The ``tv_l0``, ``tv_l1`` and ``tv_linf`` the construction guarantees."""
    built = _construct(g, spec)
    return {"tv_l0": built.tv_l0, "tv_l1": built.tv_l1, "tv_linf": built.tv_linf}


def signal_stats(
    g: Graph, beta_star: ArrayLike, q_list: tuple[float, ...] = (0.5,)
) -> SignalStats:
    """Exact edge norms of ``D beta*``; magnitudes <= 1e-12 count as zero."""
    beta = np.asarray(beta_star, dtype=float)
    if beta.shape != (g.p,):
        raise ValidationError(f"beta has shape {beta.shape}, graph has p={g.p}")
    diffs = np.abs(incidence_matrix(g) @ beta)
    diffs[diffs <= ZERO_THRESHOLD] = 0.0
    lq = {}
    for q in q_list:
        if not 0 < q <= 1:
            raise ValidationError(f"q must be in (0, 1], got {q}")
        lq[float(q)] = float(np.sum(diffs[diffs > 0] ** q))
    return SignalStats(
        tv_l0=int(np.count_nonzero(diffs)),
        tv_l1=float(diffs.sum()),
        tv_linf=float(diffs.max(initial=0.0)),
        lq_sum=lq,
        sparsity=int(np.count_nonzero(np.abs(beta) > ZERO_THRESHOLD)),
    )


# =============================================================================
# Simulation and metrics
# =============================================================================


@dataclass(eq=False)
class ExperimentRun:
    """One simulated train/validation/test split from ``y = X beta* + eps``."""

    X_train: Array
    y_train: Array
    X_val: Array
    y_val: Array
    X_test: Array
    y_test: Array
    beta_star: Array
    sigma: float
    seed: int
    metrics: dict[str, dict[str, float]] = field(default_factory=dict)


def simulate(
    Sigma: CovarianceMatrix | ArrayLike,
    beta_star: ArrayLike,
    sigma: float,
    n_train: int,
    n_val: int,
    n_test: int,
    seed: int,
) -> ExperimentRun:
    """Draw independent training, validation and test sets.

    Rows of ``X`` are i.i.d. ``N(0, Sigma)`` and the noise is i.i.d.
    ``N(0, sigma^2)``. Everything is a function of ``seed``; ``n_val = 0``
    gives an empty validation set.
    """
    if not sigma >= 0:
        raise ValidationError(f"noise sd must be >= 0, got {sigma}")
    if n_train < 1 or n_test < 1 or n_val < 0:
        raise ValidationError(
            f"need n_train >= 1, n_test >= 1, n_val >= 0; got {n_train}, {n_test}, {n_val}"
        )
    if isinstance(Sigma, CovarianceMatrix):
        matrix = Sigma.matrix
    else:
        matrix = np.asarray(Sigma, dtype=float)
    beta = np.asarray(beta_star, dtype=float)
    if matrix.shape != (beta.shape[0], beta.shape[0]):
        raise ValidationError(f"Sigma has shape {matrix.shape} but beta* has p={beta.shape[0]}")
    rng = make_rng(seed)
    root = sqrtm_psd(matrix)

    def draw(n: int) -> tuple[Array, Array]:
        X = rng.standard_normal((n, beta.shape[0])) @ root
        return X, X @ beta + sigma * rng.standard_normal(n)

    X_train, y_train = draw(n_train)
    X_val, y_val = draw(n_val)
    X_test, y_test = draw(n_test)
    return ExperimentRun(X_train, y_train, X_val, y_val, X_test, y_test, beta, float(sigma), seed)


def evaluate(beta_hat: ArrayLike, run: ExperimentRun) -> dict[str, float]:
    """``||beta_hat - beta*||_2`` and ``(1/n_test) ||X_test (beta_hat - beta*)||_2^2``."""
    delta = np.asarray(beta_hat, dtype=float) - run.beta_star
    if delta.shape != run.beta_star.shape:
        raise ValidationError("beta_hat and beta* differ in length")
    fitted = run.X_test @ delta
    return {
        "estimation_error": float(np.linalg.norm(delta)),
        "prediction_error": float(fitted @ fitted) / run.X_test.shape[0],
    }


# =============================================================================
# Resampling studies
# =============================================================================


DEFAULT_ESTIMATORS = (
    Preset.GEN,
    Preset.FUSED_LASSO,
    Preset.SMOOTH_LASSO,
    Preset.LASSO,
    Preset.OLS,
)


def study_grid() -> tuple[float, ...]:
    """Coarse grid for resampling studies: 0 plus 7 log-spaced values in [3e-3, 3]."""
    return (0.0, *(float(v) for v in np.logspace(math.log10(3e-3), math.log10(3.0), 7)))


@dataclass(frozen=True, eq=False)
class StudyDesign:
    """Everything needed to run a resampling study.

    Attributes:
        graph: Graph of the signal and of the graph-based penalties.
        covariance: Row covariance of the designs.
        signal: Signal construction.
        n_train: Training size.
        n_val: Validation size; 0 switches tuning to k-fold CV on train.
        n_test: Test size.
        sigma: Noise standard deviation.
        replicates: Number of replicates.
        base_seed: Replicate ``i`` uses seed ``base_seed + i``.
        estimators: Presets to compare.
        grids: Grid per hyperparameter name; missing names use
            :func:`study_grid`.
        k: Folds when ``n_val = 0``.
        options: Solver options for every fit.
    """

    graph: Graph
    covariance: CovarianceMatrix
    signal: SignalSpec
    n_train: int = 70
    n_val: int = 70
    n_test: int = 500
    sigma: float = 1.0
    replicates: int = 50
    base_seed: int = 0
    estimators: tuple[Preset, ...] = DEFAULT_ESTIMATORS
    grids: dict[str, tuple[float, ...]] = field(default_factory=dict)
    k: int = 5
    options: SolverOptions = field(default_factory=lambda: SolverOptions(solver=SolverKind.AUTO))

    def __post_init__(self) -> None:
        object.__setattr__(self, "estimators", tuple(Preset(e) for e in self.estimators))
        if self.replicates < 1:
            raise ValidationError(f"replicates must be >= 1, got {self.replicates}")
        if self.covariance.p != self.graph.p:
            raise ValidationError(
                f"covariance has p={self.covariance.p} but graph has p={self.graph.p}"
            )

    def plan_for(self, preset: Preset, seed: int) -> CVPlan:
        grids = {
            name: self.grids.get(name, study_grid())
            for name in preset.required_hyperparameters
        }
        return CVPlan(preset, grids, k=self.k, seed=seed, loss_convention=LossConvention.MEAN_SUMSQ)

    def describe(self) -> dict[str, Any]:
        return {
            "graph": self.graph.describe(),
            "covariance": self.covariance.describe(),
            "signal": self.signal.describe(),
            "n_train": self.n_train,
            "n_val": self.n_val,
            "n_test": self.n_test,
            "sigma": self.sigma,
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "estimators": [e.value for e in self.estimators],
            "grids": {name: list(values) for name, values in self.grids.items()},
            "k": self.k,
            "solver": self.options.describe(),
        }


@dataclass(frozen=True)
class ReplicateRecord:
    """Metrics of one estimator on one replicate."""

    replicate: int
    seed: int
    estimator: str
    estimation_error: float
    prediction_error: float
    best_params: dict[str, float]
    converged: bool
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _tune_and_fit(
    design: StudyDesign, run: ExperimentRun, preset: Preset
) -> tuple[Array, dict[str, float], bool]:
    if not preset.required_hyperparameters:
        spec = make_estimator(preset, design.graph, p=design.graph.p)
        result = fit(run.X_train, run.y_train, spec, design.options)
        return result.beta_hat, {}, result.converged
    plan = design.plan_for(preset, run.seed)
    if design.n_val > 0:
        cv = holdout_search(
            run.X_train, run.y_train, run.X_val, run.y_val, design.graph, plan, design.options
        )
    else:
        cv = grid_search_cv(run.X_train, run.y_train, design.graph, plan, design.options)
    return cv.refit.beta_hat, cv.best_params, cv.refit.converged


def run_replicate(design: StudyDesign, replicate: int, seed: int) -> list[ReplicateRecord]:
    """Simulate one replicate and evaluate every estimator on it."""
    beta_star = make_signal(design.graph, design.signal)
    run = simulate(
        design.covariance, beta_star, design.sigma,
        design.n_train, design.n_val, design.n_test, seed,
    )
    records = []
    for preset in design.estimators:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                warnings.simplefilter("ignore", RankDeficientWarning)
                beta_hat, params, converged = _tune_and_fit(design, run, preset)
            metrics = evaluate(beta_hat, run)
        except (GenRegError, np.linalg.LinAlgError) as exc:
            logger.warning("replicate %d, %s failed: %s", replicate, preset.value, exc)
            records.append(
                ReplicateRecord(
                    replicate, seed, preset.value, float("nan"), float("nan"), {}, False, str(exc)
                )
            )
            continue
        run.metrics[preset.value] = metrics
        records.append(
            ReplicateRecord(
                replicate,
                seed,
                preset.value,
                metrics["estimation_error"],
                metrics["prediction_error"],
                params,
                converged,
            )
        )
    logger.info("replicate %d (seed %d) done", replicate, seed)
    return records


def _replicate_task(args: tuple[StudyDesign, int, int]) -> list[ReplicateRecord]:
    return run_replicate(*args)


def run_study(design: StudyDesign, jobs: int = 1) -> list[ReplicateRecord]:
    """Run every replicate, in joblib workers when ``jobs > 1``.

    Records come back in (replicate, estimator) order regardless of ``jobs``.
    """
    seeds = derive_seeds(design.base_seed, design.replicates)
    tasks = [(design, i, seed) for i, seed in enumerate(seeds)]
    logger.info(
        "running %d replicates x %d estimators (jobs=%d)",
        design.replicates, len(design.estimators), jobs,
    )
    if jobs <= 1:
        batches = [_replicate_task(task) for task in tasks]
    else:
        batches = Parallel(n_jobs=jobs)(delayed(_replicate_task)(task) for task in tasks)
    return [record for batch in batches for record in batch]


@dataclass(frozen=True)
class SummaryRow:
    """Median and quartiles of both errors for one estimator."""

    estimator: str
    n_ok: int
    n_failed: int
    estimation_median: float
    estimation_q25: float
    estimation_q75: float
    prediction_median: float
    prediction_q25: float
    prediction_q75: float


def summarize(records: list[ReplicateRecord]) -> list[SummaryRow]:
    """Per-estimator median, 25th and 75th percentiles over successful replicates."""
    order: list[str] = []
    for record in records:
        if record.estimator not in order:
            order.append(record.estimator)
    rows = []
    for name in order:
        ok = [r for r in records if r.estimator == name and not r.failed]
        failed = sum(1 for r in records if r.estimator == name and r.failed)
        if ok:
            est = np.percentile([r.estimation_error for r in ok], [50, 25, 75])
            pred = np.percentile([r.prediction_error for r in ok], [50, 25, 75])
        else:
            est = pred = np.full(3, np.nan)
        rows.append(
            SummaryRow(name, len(ok), failed, *(float(v) for v in est), *(float(v) for v in pred))
        )
    return rows


REPLICATE_COLUMNS = (
    "replicate",
    "seed",
    "estimator",
    "estimation_error",
    "prediction_error",
    "converged",
    "failed",
    "best_params",
)

SUMMARY_COLUMNS = (
    "estimator",
    "n_ok",
    "n_failed",
    "estimation_median",
    "estimation_q25",
    "estimation_q75",
    "prediction_median",
    "prediction_q25",
    "prediction_q75",
)


def write_replicates_csv(records: list[ReplicateRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(REPLICATE_COLUMNS)
        for r in records:
            params = ";".join(f"{k}={v!r}" for k, v in sorted(r.best_params.items()))
            writer.writerow(
                [
                    r.replicate,
                    r.seed,
                    r.estimator,
                    repr(r.estimation_error),
                    repr(r.prediction_error),
                    str(r.converged).lower(),
                    str(r.failed).lower(),
                    params,
                ]
            )
    return path


def write_summary_csv(rows: list[SummaryRow], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow(
                [row.estimator, row.n_ok, row.n_failed]
                + [repr(getattr(row, column)) for column in SUMMARY_COLUMNS[3:]]
            )
    return path

