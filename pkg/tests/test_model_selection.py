"""Tests for k-fold splitting and grid-search model selection."""

import csv
import json
import math

import numpy as np
import pytest

from genreg import (
    CVPlan,
    Preset,
    SolverError,
    SolverOptions,
    ValidationError,
    chain_graph,
    grid_search_cv,
    holdout_search,
    kfold_indices,
)
from genreg import model_selection
from genreg.model_selection import (
    GridScore,
    cv_summary,
    default_grid,
    grid_points,
    negative_mse,
    select_best,
    write_cv_table,
)
from genreg.numerics import make_rng


def _step_data(seed: int = 0, n: int = 60, p: int = 10, sigma: float = 0.5):
    """A chain step signal: 0 on the first half, 3 on the second."""
    rng = make_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.where(np.arange(p) < p // 2, 0.0, 3.0)
    return X, X @ beta + sigma * rng.standard_normal(n), chain_graph(p)


class TestKFold:
    """Test the seeded fold split."""

    def test_even_split(self) -> None:
        folds = kfold_indices(4, 2, seed=0)
        assert [len(f) for f in folds] == [2, 2]
        assert sorted(np.concatenate(folds).tolist()) == [0, 1, 2, 3]

    def test_uneven_split(self) -> None:
        assert sorted(len(f) for f in kfold_indices(5, 2, seed=0)) == [2, 3]

    def test_deterministic(self) -> None:
        first = kfold_indices(23, 5, seed=9)
        second = kfold_indices(23, 5, seed=9)
        assert all(np.array_equal(a, b) for a, b in zip(first, second, strict=True))

    def test_invalid(self) -> None:
        with pytest.raises(ValidationError):
            kfold_indices(5, 1, seed=0)
        with pytest.raises(ValidationError):
            kfold_indices(3, 4, seed=0)


class TestPlan:
    """Test CVPlan validation and grids."""

    def test_default_grid(self) -> None:
        grid = default_grid("lambda1")
        assert len(grid) == 21
        assert grid[0] == 0.0
        assert grid[1] == pytest.approx(1e-3)
        assert grid[-1] == pytest.approx(1e2)

    def test_grids_sorted(self) -> None:
        plan = CVPlan("lasso", {"lambdaL": [1.0, 0.0, 0.5]})
        assert plan.grids["lambdaL"] == (0.0, 0.5, 1.0)

    def test_unused_grid_dropped(self) -> None:
        plan = CVPlan("lasso", {"lambdaL": [1.0], "lambda2": [0.1]})
        assert set(plan.grids) == {"lambdaL"}

    def test_missing_grid(self) -> None:
        with pytest.raises(ValidationError, match="lambda2"):
            CVPlan("gen", {"lambda1": [1.0]})

    def test_bad_values(self) -> None:
        with pytest.raises(ValidationError):
            CVPlan("lasso", {"lambdaL": [-1.0]})
        with pytest.raises(ValidationError):
            CVPlan("lasso", {"lambdaL": []})
        with pytest.raises(ValidationError):
            CVPlan("lasso", {"lambdaL": [1.0], "lambdaX": [1.0]})
        with pytest.raises(ValidationError):
            CVPlan("lasso", {"lambdaL": [1.0]}, k=1)

    def test_grid_points(self) -> None:
        plan = CVPlan("gen", {"lambda1": [0.0, 1.0, 2.0], "lambda2": [0.0, 0.5]})
        points = grid_points(plan)
        assert len(points) == plan.size == 6
        assert points[0] == {"lambda1": 0.0, "lambda2": 0.0}

    def test_with_default_grids(self) -> None:
        plan = CVPlan.with_default_grids(Preset.ELASTIC_NET, k=3)
        assert set(plan.grids) == {"lambdaE", "lambdaL"}
        assert plan.size == 21 * 21


class TestSelection:
    """Test best-point selection."""

    def test_highest_mean(self) -> None:
        table = [
            GridScore({"lambda1": 0.0}, (-2.0, -2.0), True),
            GridScore({"lambda1": 1.0}, (-1.0, -1.5), True),
        ]
        assert select_best(table).params == {"lambda1": 1.0}

    def test_tie_prefers_stronger_regularization(self) -> None:
        table = [
            GridScore({"lambda1": 1.0, "lambda2": 0.0}, (-1.0,), True),
            GridScore({"lambda1": 0.0, "lambda2": 1.0}, (-1.0,), True),
            GridScore({"lambda1": 2.0, "lambda2": 0.0}, (-1.0,), True),
        ]
        assert select_best(table).params == {"lambda1": 0.0, "lambda2": 1.0}

    def test_flagged_excluded(self) -> None:
        table = [
            GridScore({"lambdaL": 0.0}, (-0.1,), False),
            GridScore({"lambdaL": 1.0}, (-5.0,), True),
            GridScore({"lambdaL": 2.0}, (float("nan"),), True),
        ]
        assert table[0].flagged and table[2].flagged
        assert select_best(table).params == {"lambdaL": 1.0}

    def test_all_flagged_falls_back(self) -> None:
        table = [
            GridScore({"lambdaL": 0.0}, (-0.1,), False),
            GridScore({"lambdaL": 1.0}, (-5.0,), False),
        ]
        assert select_best(table).params == {"lambdaL": 0.0}

    def test_all_failed_raises(self) -> None:
        table = [GridScore({"lambdaL": 0.0}, (float("nan"),), False)]
        with pytest.raises(SolverError, match="failed"):
            select_best(table)

    def test_negative_mse(self) -> None:
        assert negative_mse(np.eye(2), [1.0, 3.0], [0.0, 0.0]) == pytest.approx(-5.0)


class TestGridSearch:
    """Test end-to-end searches."""

    def test_single_point(self) -> None:
        X, y, g = _step_data()
        plan = CVPlan("gen", {"lambda1": [0.1], "lambda2": [0.05]}, k=3)
        result = grid_search_cv(X, y, g, plan)
        assert result.best_params == {"lambda1": 0.1, "lambda2": 0.05}
        assert len(result.score_table) == 1
        assert len(result.score_table[0].fold_scores) == 3

    def test_absurd_point_rejected(self) -> None:
        """Huge fusion flattens the step and must lose."""
        X, y, g = _step_data()
        plan = CVPlan("gen", {"lambda1": [0.01, 0.1, 1e6], "lambda2": [0.0, 0.01]}, k=4, seed=1)
        result = grid_search_cv(X, y, g, plan, SolverOptions(solver="auto"))
        assert result.best_params["lambda1"] != 1e6
        assert np.abs(result.refit.beta_hat[-1] - 3.0) < 0.5

    def test_lasso_zero_is_ols(self) -> None:
        X, y, _ = _step_data(seed=2)
        plan = CVPlan("lasso", {"lambdaL": [0.0]}, k=3)
        result = grid_search_cv(X, y, None, plan)
        ols = np.linalg.lstsq(X, y, rcond=None)[0]
        np.testing.assert_allclose(result.refit.beta_hat, ols, atol=1e-8)

    def test_deterministic(self) -> None:
        X, y, g = _step_data(seed=3)
        plan = CVPlan("fused_lasso", {"lambda1": [0.0, 0.1], "lambdaL": [0.0, 0.01]}, k=3)
        first = grid_search_cv(X, y, g, plan)
        second = grid_search_cv(X, y, g, plan)
        assert [r.fold_scores for r in first.score_table] == [
            r.fold_scores for r in second.score_table
        ]

    def test_holdout(self) -> None:
        X, y, g = _step_data(seed=4, n=80)
        plan = CVPlan("smooth_lasso", {"lambda2": [0.0, 0.1], "lambdaL": [0.0, 0.01]})
        result = holdout_search(X[:50], y[:50], X[50:], y[50:], g, plan)
        assert all(len(r.fold_scores) == 1 for r in result.score_table)
        assert result.refit.beta_hat.shape == (10,)

    def test_holdout_dimension_mismatch(self) -> None:
        X, y, g = _step_data()
        plan = CVPlan("lasso", {"lambdaL": [0.1]})
        with pytest.raises(ValidationError):
            holdout_search(X, y, X[:, :5], y, g, plan)

    def test_failed_fit_is_flagged(self, monkeypatch) -> None:
        """A solver failure at one grid value scores NaN and loses."""
        real_fit = model_selection.fit

        def flaky_fit(X, y, spec, options=None):
            if spec.lambda1 > 0.5:
                raise SolverError("singular Newton system", 3)
            return real_fit(X, y, spec, options)

        monkeypatch.setattr(model_selection, "fit", flaky_fit)
        X, y, _ = _step_data()
        plan = CVPlan("lasso", {"lambdaL": [0.01, 1.0]}, k=3)
        result = grid_search_cv(X, y, None, plan)
        failed = result.score_table[1]
        assert failed.params == {"lambdaL": 1.0}
        assert failed.flagged and not failed.converged
        assert all(math.isnan(score) for score in failed.fold_scores)
        assert result.best_params == {"lambdaL": 0.01}

    @pytest.mark.slow
    def test_parallel_matches_serial(self) -> None:
        X, y, g = _step_data(seed=5)
        plan = CVPlan("gen", {"lambda1": [0.0, 0.1], "lambda2": [0.0, 0.1]}, k=3)
        serial = grid_search_cv(X, y, g, plan, jobs=1)
        parallel = grid_search_cv(X, y, g, plan, jobs=2)
        assert serial.best_params == parallel.best_params
        assert [r.mean_score for r in serial.score_table] == [
            r.mean_score for r in parallel.score_table
        ]


class TestReports:
    """Test the CV table and summary."""

    def test_table_and_summary(self, tmp_path) -> None:
        X, y, g = _step_data(seed=6)
        plan = CVPlan("gen", {"lambda1": [0.0, 0.1], "lambda2": [0.01]}, k=3)
        result = grid_search_cv(X, y, g, plan)
        path = write_cv_table(result, tmp_path / "cv_table.csv")
        with path.open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == [
            "lambda1", "lambda2", "mean_score", "converged", "fold_1", "fold_2", "fold_3",
        ]
        assert len(rows) == 3
        summary = cv_summary(result)
        assert summary["grid_points"] == 2
        assert summary["best_params"] == result.best_params
        json.dumps(summary)
