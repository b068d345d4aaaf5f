"""Tests for signal generators, simulation and resampling studies."""

import csv

import numpy as np
import pytest

from genreg import (
    Preset,
    SignalFamily,
    SignalSpec,
    StudyDesign,
    ValidationError,
    barbell_graph,
    chain_graph,
    covariance,
    grid_graph,
    make_signal,
    run_study,
    signal_stats,
    simulate,
    summarize,
)
from genreg.config import default_experiment
from genreg.synthetic import (
    REPLICATE_COLUMNS,
    SUMMARY_COLUMNS,
    ExperimentRun,
    declared_stats,
    evaluate,
    study_grid,
    write_replicates_csv,
    write_summary_csv,
)


def _assert_declared(g, spec) -> None:
    stats = signal_stats(g, make_signal(g, spec))
    declared = declared_stats(g, spec)
    assert stats.tv_l0 == declared["tv_l0"]
    assert stats.tv_l1 == pytest.approx(declared["tv_l1"], abs=1e-9)
    assert stats.tv_linf == pytest.approx(declared["tv_linf"], abs=1e-9)


def _tiny_design(**overrides) -> StudyDesign:
    g = chain_graph(12)
    values = dict(
        graph=g,
        covariance=covariance("toeplitz", p=12, rho=0.5),
        signal=SignalSpec.staircase(2, 6.0),
        n_train=30,
        n_val=20,
        n_test=40,
        replicates=2,
        estimators=(Preset.GEN, Preset.LASSO, Preset.OLS),
        grids={"lambda1": (0.0, 0.1), "lambda2": (0.0, 0.1), "lambdaL": (0.0, 0.1)},
    )
    values.update(overrides)
    return StudyDesign(**values)


class TestChainSignals:
    """Test signal constructions on chains."""

    def test_staircase(self) -> None:
        g = chain_graph(110)
        stats = signal_stats(g, make_signal(g, SignalSpec.staircase(3, 15.0)))
        assert stats.tv_l0 == 3
        assert stats.tv_l1 == pytest.approx(15.0)
        assert stats.tv_linf == pytest.approx(5.0)

    def test_full_ramp(self) -> None:
        g = chain_graph(100)
        stats = signal_stats(g, make_signal(g, SignalSpec.ramp(15.0)))
        assert stats.tv_l0 == 99
        assert stats.tv_linf == pytest.approx(15.0 / 99)

    @pytest.mark.parametrize(
        "spec",
        [
            SignalSpec.staircase(5, 12.0),
            SignalSpec.ramp(15.0, ramp_edges=20),
            SignalSpec.mixed(3, 15.0),
            SignalSpec(SignalFamily.SPARSE_BUMP, target_tv=10.0, support=9),
            SignalSpec(SignalFamily.SPARSE_BUMP, target_tv=10.0, support=8, spike=2.0),
        ],
    )
    def test_declared_stats(self, spec) -> None:
        """Every chain family realizes its declared edge statistics."""
        _assert_declared(chain_graph(110), spec)

    def test_base_level(self) -> None:
        g = chain_graph(10)
        beta = make_signal(g, SignalSpec(SignalFamily.PIECEWISE_CONSTANT, 2.0, 1, base_level=4.0))
        assert beta[0] == 4.0
        assert signal_stats(g, beta).tv_l1 == pytest.approx(2.0)

    def test_too_many_jumps(self) -> None:
        with pytest.raises(ValidationError):
            make_signal(chain_graph(4), SignalSpec.staircase(5))

    def test_bump_does_not_fit(self) -> None:
        spec = SignalSpec(SignalFamily.SPARSE_BUMP, target_tv=4.0, support=10)
        with pytest.raises(ValidationError):
            make_signal(chain_graph(10), spec)


class TestOtherGraphs:
    """Test grid and barbell constructions."""

    def test_barbell_levels(self) -> None:
        g = barbell_graph(3, 1)
        spec = SignalSpec(SignalFamily.BARBELL_LEVELS, levels=(5.0, 20.0))
        stats = signal_stats(g, make_signal(g, spec))
        assert stats.tv_l0 == 1
        assert stats.tv_linf == pytest.approx(15.0)

    def test_barbell_long_path(self) -> None:
        _assert_declared(barbell_graph(4, 6), SignalSpec(SignalFamily.BARBELL_LEVELS))

    @pytest.mark.parametrize(
        "spec",
        [
            SignalSpec.staircase(6, 100.0),
            SignalSpec.ramp(100.0),
            SignalSpec.mixed(3, 100.0),
        ],
    )
    def test_grid_declared_stats(self, spec) -> None:
        _assert_declared(grid_graph(11, 11), spec)

    def test_wrong_family(self) -> None:
        with pytest.raises(ValidationError):
            make_signal(chain_graph(10), SignalSpec(SignalFamily.BARBELL_LEVELS))
        with pytest.raises(ValidationError):
            make_signal(barbell_graph(3, 2), SignalSpec.staircase())


class TestSignalStats:
    """Test edge statistics of given signals."""

    def test_constant(self) -> None:
        stats = signal_stats(grid_graph(3, 3), np.full(9, 2.0))
        assert (stats.tv_l0, stats.tv_l1, stats.tv_linf) == (0, 0.0, 0.0)

    def test_chain_three(self) -> None:
        stats = signal_stats(chain_graph(3), [0.0, 1.0, 3.0])
        assert (stats.tv_l0, stats.tv_l1, stats.tv_linf) == (2, 3.0, 2.0)
        assert stats.lq_sum[0.5] == pytest.approx(2.41421, abs=1e-5)
        assert stats.sparsity == 2

    def test_wrong_length(self) -> None:
        with pytest.raises(ValidationError):
            signal_stats(chain_graph(3), [1.0, 2.0])


class TestSimulation:
    """Test simulated splits and metrics."""

    def test_noiseless(self) -> None:
        beta = np.array([1.0, -1.0, 2.0])
        run = simulate(np.eye(3), beta, 0.0, 10, 5, 7, seed=3)
        np.testing.assert_allclose(run.y_train, run.X_train @ beta)
        assert run.X_val.shape == (5, 3)
        assert run.X_test.shape == (7, 3)

    def test_deterministic(self) -> None:
        sigma = covariance("toeplitz", p=4, rho=0.5)
        first = simulate(sigma, np.ones(4), 1.0, 8, 0, 6, seed=11)
        second = simulate(sigma, np.ones(4), 1.0, 8, 0, 6, seed=11)
        np.testing.assert_array_equal(first.X_train, second.X_train)
        np.testing.assert_array_equal(first.y_test, second.y_test)
        assert first.X_val.shape == (0, 4)

    def test_ols_consistency(self) -> None:
        beta = np.array([1.0, 0.0, -2.0, 0.5, 3.0])
        run = simulate(np.eye(5), beta, 1.0, 10_000, 0, 10, seed=0)
        ols = np.linalg.lstsq(run.X_train, run.y_train, rcond=None)[0]
        assert np.linalg.norm(ols - beta) <= 0.1

    def test_evaluate(self) -> None:
        beta = np.array([1.0, 2.0, 3.0])
        empty_X, empty_y = np.zeros((0, 3)), np.zeros(0)
        run = ExperimentRun(
            X_train=empty_X,
            y_train=empty_y,
            X_val=empty_X,
            y_val=empty_y,
            X_test=np.eye(3),
            y_test=np.zeros(3),
            beta_star=beta,
            sigma=1.0,
            seed=0,
        )
        assert evaluate(beta, run) == {"estimation_error": 0.0, "prediction_error": 0.0}
        metrics = evaluate(beta + np.array([1.0, 0.0, 0.0]), run)
        assert metrics["estimation_error"] == pytest.approx(1.0)
        assert metrics["prediction_error"] == pytest.approx(1.0 / 3)

    def test_prediction_error_quadratic_form(self) -> None:
        sigma = covariance("toeplitz", p=3, rho=0.4)
        run = simulate(sigma, np.zeros(3), 1.0, 5, 0, 20, seed=2)
        delta = np.array([0.3, -1.2, 0.7])
        expected = 0.0
        for row in run.X_test:
            total = 0.0
            for j in range(3):
                total += row[j] * delta[j]
            expected += total * total
        assert evaluate(delta, run)["prediction_error"] == pytest.approx(expected / 20)

    def test_bad_sizes(self) -> None:
        with pytest.raises(ValidationError):
            simulate(np.eye(2), np.ones(2), 1.0, 0, 0, 5, seed=0)
        with pytest.raises(ValidationError):
            simulate(np.eye(3), np.ones(2), 1.0, 5, 0, 5, seed=0)


class TestStudy:
    """Test resampling studies."""

    def test_study_grid(self) -> None:
        grid = study_grid()
        assert grid[0] == 0.0
        assert len(grid) == 8
        assert grid[-1] == pytest.approx(3.0)

    def test_records_and_summary(self) -> None:
        design = _tiny_design()
        records = run_study(design)
        assert len(records) == 2 * 3
        assert [r.estimator for r in records[:3]] == ["gen", "lasso", "ols"]
        assert [r.seed for r in records[::3]] == [0, 1]
        rows = summarize(records)
        assert [row.estimator for row in rows] == ["gen", "lasso", "ols"]
        assert all(row.n_ok + row.n_failed == 2 for row in rows)

    def test_deterministic(self) -> None:
        design = _tiny_design(replicates=1)
        first = [r.estimation_error for r in run_study(design)]
        second = [r.estimation_error for r in run_study(design)]
        assert first == second

    def test_cross_validation_without_validation_set(self) -> None:
        design = _tiny_design(n_val=0, replicates=1, k=3, estimators=(Preset.LASSO,))
        (record,) = run_study(design)
        assert not record.failed
        assert set(record.best_params) == {"lambdaL"}

    def test_mismatched_covariance(self) -> None:
        with pytest.raises(ValidationError):
            _tiny_design(covariance=covariance("identity", p=5))

    def test_csv_outputs(self, tmp_path) -> None:
        records = run_study(_tiny_design(replicates=1))
        with write_replicates_csv(records, tmp_path / "replicates.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert tuple(rows[0]) == REPLICATE_COLUMNS
        assert len(rows) == 4
        with write_summary_csv(summarize(records), tmp_path / "summary.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert tuple(rows[0]) == SUMMARY_COLUMNS

    @pytest.mark.slow
    def test_default_study_ordering(self) -> None:
        """GEN has the smallest median estimation error on the mixed chain study."""
        rows = {row.estimator: row for row in summarize(run_study(default_experiment(), jobs=4))}
        gen = rows["gen"].estimation_median
        for other in ("fused_lasso", "smooth_lasso", "lasso", "ols"):
            assert gen <= rows[other].estimation_median
