"""K-fold cross-validation and grid search over estimator hyperparameters.

Grid points are scored by the negative mean squared error on held-out data,
``-(1/n_val) ||y_val - X_val beta||^2``, and the best point is refit on all
the training data.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike

from genreg.errors import (
    ConvergenceWarning,
    GenRegError,
    RankDeficientWarning,
    SolverError,
    ValidationError,
)
from genreg.graph import Graph
from genreg.numerics import Array, make_rng
from genreg.penalty import HYPERPARAMETER_NAMES, LossConvention, Preset, make_estimator
from genreg.solvers import FitResult, SolverOptions, fit

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 20
DEFAULT_GRID_RANGE = (1e-3, 1e2)

# Among equal mean scores the larger value of the first differing name wins.
TIE_BREAK_ORDER = ("lambda2", "lambda1", "lambdaL", "lambdaE")


def default_grid(name: str | None = None) -> tuple[float, ...]:
    """``0`` followed by 20 log-spaced values spanning ``[1e-3, 1e2]``.

    The same grid is used for every hyperparameter; ``name`` is accepted so
    callers can ask per name.
    """
    if name is not None and name not in HYPERPARAMETER_NAMES:
        raise ValidationError(f"unknown hyperparameter: {name!r}")
    low, high = DEFAULT_GRID_RANGE
    values = np.logspace(math.log10(low), math.log10(high), DEFAULT_GRID_SIZE)
    return (0.0, *(float(v) for v in values))


@dataclass(frozen=True)
class CVPlan:
    """What to search and how to split.

    Attributes:
        preset: Estimator preset whose hyperparameters are searched.
        grids: Hyperparameter name to values; stored sorted ascending.
        k: Number of folds.
        seed: Seed of the fold permutation.
        loss_convention: Loss scaling the grid values refer to.
    """

    preset: Preset
    grids: dict[str, tuple[float, ...]]
    k: int = 5
    seed: int = 0
    loss_convention: LossConvention = LossConvention.MEAN_SUMSQ

    def __post_init__(self) -> None:
        object.__setattr__(self, "preset", Preset(self.preset))
        object.__setattr__(self, "loss_convention", LossConvention(self.loss_convention))
        if self.k < 2:
            raise ValidationError(f"k must be >= 2, got {self.k}")
        required = self.preset.required_hyperparameters
        missing = [name for name in required if name not in self.grids]
        if missing:
            raise ValidationError(
                f"preset '{self.preset.value}' needs grids for: {', '.join(missing)}"
            )
        cleaned: dict[str, tuple[float, ...]] = {}
        for name, values in self.grids.items():
            if name not in HYPERPARAMETER_NAMES:
                raise ValidationError(f"unknown hyperparameter: {name!r}")
            if name not in required:
                logger.debug("ignoring grid for %s, unused by %s", name, self.preset.value)
                continue
            floats = sorted(float(v) for v in values)
            if not floats:
                raise ValidationError(f"grid for {name} is empty")
            if any(v < 0 or not math.isfinite(v) for v in floats):
                raise ValidationError(f"grid for {name} must hold finite values >= 0")
            cleaned[name] = tuple(floats)
        object.__setattr__(self, "grids", cleaned)

    @classmethod
    def with_default_grids(
        cls, preset: Preset | str, k: int = 5, seed: int = 0
    ) -> CVPlan:
        """Plan using :func:`default_grid` for every hyperparameter of ``preset``."""
        preset = Preset(preset)
        grids = {name: default_grid(name) for name in preset.required_hyperparameters}
        return cls(preset=preset, grids=grids, k=k, seed=seed)

    @property
    def size(self) -> int:
        return math.prod(len(values) for values in self.grids.values())

    def describe(self) -> dict[str, Any]:
        return {
            "preset": self.preset.value,
            "k": self.k,
            "seed": self.seed,
            "loss_convention": self.loss_convention.value,
            "grids": {name: list(values) for name, values in self.grids.items()},
        }


@dataclass(frozen=True)
class GridScore:
    """Held-out scores of one grid point.

    Attributes:
        params: The hyperparameters.
        fold_scores: Negative MSE per fold, in fold order.
        converged: Whether every fold's fit converged.
    """

    params: dict[str, float]
    fold_scores: tuple[float, ...]
    converged: bool

    @property
    def mean_score(self) -> float:
        return float(np.mean(self.fold_scores))

    @property
    def flagged(self) -> bool:
        """Excluded from selection: a fold did not converge or scored non-finite."""
        return not self.converged or not math.isfinite(self.mean_score)


@dataclass(frozen=True, eq=False)
class CVResult:
    """Outcome of a grid search.

    Attributes:
        best_params: Selected hyperparameters.
        score_table: One entry per grid point, in :func:`grid_points` order.
        refit: Fit on all training data at ``best_params``.
        plan: The plan that was run.
    """

    best_params: dict[str, float]
    score_table: list[GridScore]
    refit: FitResult
    plan: CVPlan
    best_score: float = float("nan")
    notes: list[str] = field(default_factory=list)

    @property
    def n_flagged(self) -> int:
        return sum(1 for row in self.score_table if row.flagged)


# =============================================================================
# Folds and grids
# =============================================================================


def kfold_indices(n: int, k: int, seed: int | np.random.Generator) -> list[Array]:
    """Split a seeded permutation of ``range(n)`` into ``k`` contiguous blocks.

    Block sizes differ by at most one, larger blocks first.
    The permutation comes from ``make_rng(seed)``, the same PCG64 stream used
    for designs and noise.

    Raises:
        ValidationError: If ``k < 2`` or ``k > n``.

    Examples:
        >>> [len(f) for f in kfold_indices(5, 2, seed=0)]
        [3, 2]
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValidationError(f"cannot split n={n} observations into k={k} folds")
    order = make_rng(seed).permutation(n)
    return [np.sort(block) for block in np.array_split(order, k)]


def grid_points(plan: CVPlan) -> list[dict[str, float]]:
    """Cartesian product of the plan's grids, names in sorted order."""
    names = sorted(plan.grids)
    return [
        dict(zip(names, values, strict=True))
        for values in itertools.product(*(plan.grids[name] for name in names))
    ]


def _tie_key(params: dict[str, float]) -> tuple[float, ...]:
    return tuple(params.get(name, 0.0) for name in TIE_BREAK_ORDER)


def select_best(table: list[GridScore]) -> GridScore:
    """Highest mean score among unflagged points, ties to stronger regularization.

    Non-finite scores never win. When every point is flagged the finite ones
    are used instead.

    Raises:
        ValidationError: If the table is empty.
        SolverError: If no grid point has a finite score.
    """
    if not table:
        raise ValidationError("score table is empty")
    candidates = [row for row in table if not row.flagged]
    if not candidates:
        logger.warning("every grid point was flagged; selecting among the finite ones")
        candidates = [row for row in table if math.isfinite(row.mean_score)]
    if not candidates:
        raise SolverError(f"all {len(table)} grid points failed to fit")
    return max(candidates, key=lambda row: (row.mean_score, _tie_key(row.params)))


# =============================================================================
# Scoring
# =============================================================================


def negative_mse(X: ArrayLike, y: ArrayLike, beta: ArrayLike) -> float:
    """``-(1/n) ||y - X beta||^2``."""
    residual = np.asarray(y, dtype=float) - np.asarray(X, dtype=float) @ np.asarray(beta)
    return -float(residual @ residual) / residual.shape[0]


def _score_task(
    task: tuple[Array, Array, Array, Array, Graph | None, CVPlan, dict[str, float], SolverOptions],
) -> tuple[float, bool]:
    X_fit, y_fit, X_val, y_val, graph, plan, params, options = task
    spec = make_estimator(
        plan.preset,
        graph,
        p=X_fit.shape[1],
        loss_convention=plan.loss_convention,
        **params,
    )
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            warnings.simplefilter("ignore", RankDeficientWarning)
            result = fit(X_fit, y_fit, spec, options)
    except (GenRegError, np.linalg.LinAlgError) as exc:
        logger.warning("fit failed at %s: %s", params, exc)
        return float("nan"), False
    return negative_mse(X_val, y_val, result.beta_hat), result.converged


def _run_tasks(tasks: list[Any], jobs: int) -> list[tuple[float, bool]]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_score_task(task) for task in tasks]
    return Parallel(n_jobs=jobs)(delayed(_score_task)(task) for task in tasks)


def _search(
    X: Array,
    y: Array,
    splits: list[tuple[Array, Array]],
    graph: Graph | None,
    plan: CVPlan,
    options: SolverOptions,
    jobs: int,
) -> list[GridScore]:
    points = grid_points(plan)
    tasks = [
        (X[train], y[train], X[val], y[val], graph, plan, params, options)
        for params in points
        for train, val in splits
    ]
    logger.info(
        "scoring %d grid points x %d splits for %s (jobs=%d)",
        len(points), len(splits), plan.preset.value, jobs,
    )
    outcomes = _run_tasks(tasks, jobs)
    table = []
    per_point = len(splits)
    for index, params in enumerate(points):
        chunk = outcomes[index * per_point : (index + 1) * per_point]
        table.append(
            GridScore(
                params=params,
                fold_scores=tuple(score for score, _ in chunk),
                converged=all(ok for _, ok in chunk),
            )
        )
    return table


def _finish(
    X: Array,
    y: Array,
    graph: Graph | None,
    plan: CVPlan,
    options: SolverOptions,
    table: list[GridScore],
) -> CVResult:
    best = select_best(table)
    spec = make_estimator(
        plan.preset,
        graph,
        p=X.shape[1],
        loss_convention=plan.loss_convention,
        **best.params,
    )
    refit = fit(X, y, spec, options)
    notes = []
    flagged = sum(1 for row in table if row.flagged)
    if flagged:
        notes.append(f"{flagged} of {len(table)} grid points flagged as non-converged")
    logger.info(
        "best %s params %s (score %.6g)", plan.preset.value, best.params, best.mean_score
    )
    return CVResult(
        best_params=dict(best.params),
        score_table=table,
        refit=refit,
        plan=plan,
        best_score=best.mean_score,
        notes=notes,
    )


def _as_data(X: ArrayLike, y: ArrayLike) -> tuple[Array, Array]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    return X, y


def grid_search_cv(
    X: ArrayLike,
    y: ArrayLike,
    graph: Graph | None,
    plan: CVPlan,
    options: SolverOptions | None = None,
    jobs: int = 1,
) -> CVResult:
    """Exhaustive k-fold grid search, then a refit on all of ``(X, y)``.

    Args:
        X: Training design.
        y: Training response.
        graph: Graph for presets that need one.
        plan: Grids, folds and seed.
        options: Solver options shared by every fit.
        jobs: Worker processes for the (grid point x fold) fits.

    Returns:
        The selected parameters, the full score table and the refit.
        Grid points with a non-converged fold are kept in the table but
        excluded from selection.
    """
    X, y = _as_data(X, y)
    options = options or SolverOptions()
    folds = kfold_indices(X.shape[0], plan.k, plan.seed)
    everything = np.arange(X.shape[0])
    splits = [(np.setdiff1d(everything, fold), fold) for fold in folds]
    table = _search(X, y, splits, graph, plan, options, jobs)
    return _finish(X, y, graph, plan, options, table)


def holdout_search(
    X_train: ArrayLike,
    y_train: ArrayLike,
    X_val: ArrayLike,
    y_val: ArrayLike,
    graph: Graph | None,
    plan: CVPlan,
    options: SolverOptions | None = None,
    jobs: int = 1,
) -> CVResult:
    """Fit every grid point on the training set and score it on a validation set.

    ``plan.k`` and ``plan.seed`` are unused; each :class:`GridScore` has a
    single score. The refit uses the training set only.
    """
    X_train, y_train = _as_data(X_train, y_train)
    X_val, y_val = _as_data(X_val, y_val)
    if X_val.shape[1] != X_train.shape[1]:
        raise ValidationError("training and validation designs differ in p")
    options = options or SolverOptions()
    X = np.vstack([X_train, X_val])
    y = np.concatenate([y_train, y_val])
    n_train = X_train.shape[0]
    splits = [(np.arange(n_train), np.arange(n_train, X.shape[0]))]
    table = _search(X, y, splits, graph, plan, options, jobs)
    return _finish(X_train, y_train, graph, plan, options, table)


# =============================================================================
# Reports
# =============================================================================


def write_cv_table(result: CVResult, path: str | Path) -> Path:
    """One CSV row per grid point: params, mean_score, converged, fold scores."""
    path = Path(path)
    names = sorted(result.plan.grids)
    n_folds = max((len(row.fold_scores) for row in result.score_table), default=0)
    header = [*names, "mean_score", "converged", *(f"fold_{i + 1}" for i in range(n_folds))]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in result.score_table:
            writer.writerow(
                [
                    *(repr(row.params[name]) for name in names),
                    repr(row.mean_score),
                    str(row.converged).lower(),
                    *(repr(score) for score in row.fold_scores),
                ]
            )
    return path


def cv_summary(result: CVResult) -> dict[str, Any]:
    """JSON-friendly summary of a search and its refit."""
    return {
        "plan": result.plan.describe(),
        "best_params": result.best_params,
        "best_score": result.best_score,
        "grid_points": len(result.score_table),
        "flagged_points": result.n_flagged,
        "notes": list(result.notes),
        "refit": result.refit.diagnostics(),
    }
