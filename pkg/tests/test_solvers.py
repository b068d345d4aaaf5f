"""Tests for the dual construction, the three solvers and the fit entry point."""

import numpy as np
import pytest

from genreg import (
    ConvergenceWarning,
    DualProblem,
    LossConvention,
    SolverKind,
    SolverOptions,
    ValidationError,
    augment,
    build_dual,
    build_graph,
    chain_graph,
    fit,
    grid_graph,
    incidence_matrix,
    make_estimator,
    objective,
    solve_admm,
    solve_cd,
    solve_ip,
)
from genreg.numerics import make_rng
from genreg.solvers import box_project, least_squares, optimality_report, recover_primal


def _dual(Q, b, box) -> DualProblem:
    """A bare dual problem without the primal-recovery pieces."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    m = Q.shape[0]
    return DualProblem(
        Q=Q,
        b=np.asarray(b, dtype=float),
        box=np.asarray(box, dtype=float),
        kernel_dim_xtilde=0,
        factor=np.zeros((m, 0)),
        response_coords=np.zeros(0),
        singular_values=np.zeros(0),
        right_vectors=np.zeros((0, m)),
    )


def _random_dual(seed: int) -> DualProblem:
    rng = make_rng(seed)
    m = int(rng.integers(2, 9))
    G = rng.standard_normal((m, m + 3))
    return _dual(G @ G.T, 3.0 * rng.standard_normal(m), rng.uniform(0.2, 1.5, m))


def _projected_gradient(dp: DualProblem, iterations: int = 20_000) -> np.ndarray:
    step = 1.0 / np.linalg.eigvalsh(dp.Q).max()
    u = np.zeros(dp.m1)
    for _ in range(iterations):
        u = np.clip(u - step * (dp.Q @ u - dp.b), -dp.box, dp.box)
    return u


def _toy(lambda1: float, lambda2: float = 0.0):
    """X = I, chain-2, y = (1, 3)."""
    spec = make_estimator("gen", chain_graph(2), lambda1=lambda1, lambda2=lambda2)
    return np.eye(2), np.array([1.0, 3.0]), spec


def _random_problem(seed: int, n: int = 30, p: int = 8, lambda1: float = 0.8):
    rng = make_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.repeat([0.0, 2.0], [p // 2, p - p // 2])
    y = X @ beta + 0.3 * rng.standard_normal(n)
    spec = make_estimator("gen", chain_graph(p), lambda1=lambda1, lambda2=0.2)
    return X, y, spec


class TestDualConstruction:
    """Test Q, b and the box."""

    def test_chain_two(self) -> None:
        X, y, spec = _toy(1.0)
        dp = build_dual(augment(X, y, spec))
        np.testing.assert_allclose(dp.Q, [[2.0]])
        np.testing.assert_allclose(dp.b, [-2.0])
        np.testing.assert_allclose(dp.box, [1.0])
        assert dp.kernel_dim_xtilde == 0

    def test_q_is_psd(self) -> None:
        rng = make_rng(3)
        X, y = rng.standard_normal((20, 10)), rng.standard_normal(20)
        spec = make_estimator("gen", grid_graph(2, 5), lambda1=1.0, lambda2=0.1)
        dp = build_dual(augment(X, y, spec))
        assert np.linalg.eigvalsh(dp.Q).min() >= -1e-8

    def test_no_l1_rows(self) -> None:
        ap = augment(np.eye(3), [1.0, 2.0, 3.0], make_estimator("ols", p=3))
        assert build_dual(ap).m1 == 0
        np.testing.assert_allclose(least_squares(ap), [1.0, 2.0, 3.0])

    def test_box_project(self) -> None:
        assert box_project(5.0, 2.0) == 2.0
        assert box_project(-3.0, 2.0) == -2.0
        assert box_project(0.5, 2.0) == 0.5


class TestCoordinateDescent:
    """Test the Gauss-Seidel dual solver."""

    def test_interior_optimum(self) -> None:
        sol = solve_cd(_dual([[2.0]], [-2.0], [10.0]))
        assert sol.u[0] == pytest.approx(-1.0)
        assert sol.converged

    def test_clamped_optimum(self) -> None:
        sol = solve_cd(_dual([[2.0]], [-2.0], [0.5]))
        assert sol.u[0] == pytest.approx(-0.5)

    def test_matches_projected_gradient(self) -> None:
        for seed in range(10):
            dp = _random_dual(seed)
            sol = solve_cd(dp, tol=1e-12, max_iter=200_000)
            assert np.abs(sol.u - _projected_gradient(dp)).max() <= 1e-5

    def test_objective_trace_decreases(self) -> None:
        sol = solve_cd(_random_dual(11), tol=1e-10, max_iter=10_000)
        trace = np.array(sol.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_zero_diagonal_coordinate_frozen(self) -> None:
        sol = solve_cd(_dual([[0.0, 0.0], [0.0, 1.0]], [1.0, 0.5], [1.0, 1.0]))
        np.testing.assert_allclose(sol.u, [0.0, 0.5])

    def test_iteration_cap(self) -> None:
        dp = _random_dual(4)
        sol = solve_cd(dp, tol=1e-14, max_iter=1)
        assert not sol.converged
        assert sol.iterations == 1


class TestInteriorPoint:
    """Test the barrier method."""

    def test_interior_optimum(self) -> None:
        sol = solve_ip(_dual([[2.0]], [-2.0], [10.0]), tol=1e-9, max_iter=500)
        assert sol.converged
        assert sol.u[0] == pytest.approx(-1.0, abs=1e-6)

    def test_agrees_with_cd(self) -> None:
        for seed in range(10):
            dp = _random_dual(100 + seed)
            ip = solve_ip(dp, tol=1e-10, max_iter=500)
            cd = solve_cd(dp, tol=1e-12, max_iter=200_000)
            assert np.abs(ip.u - cd.u).max() <= 1e-4

    def test_multipliers_positive(self) -> None:
        sol = solve_ip(_random_dual(5), tol=1e-8, max_iter=500)
        assert np.all(sol.mu1 > 0) and np.all(sol.mu2 > 0)
        assert sol.surrogate_gap <= 1e-8

    def test_zero_radius(self) -> None:
        with pytest.raises(ValidationError):
            solve_ip(_dual([[1.0]], [1.0], [0.0]))

    def test_bad_constants(self) -> None:
        dp = _dual([[1.0]], [1.0], [1.0])
        with pytest.raises(ValidationError):
            solve_ip(dp, tau=1.0)
        with pytest.raises(ValidationError):
            solve_ip(dp, alpha=1.5)

    def test_step_count(self) -> None:
        dp = _random_dual(4)
        capped = solve_ip(dp, tol=1e-14, max_iter=1)
        assert not capped.converged
        assert capped.iterations == 1
        sol = solve_ip(dp, tol=1e-8, max_iter=500)
        assert sol.converged
        assert 1 <= sol.iterations < 500


class TestAdmm:
    """Test the ADMM reference solver."""

    def test_no_l1_is_least_squares(self) -> None:
        rng = make_rng(1)
        X, y = rng.standard_normal((12, 4)), rng.standard_normal(12)
        spec = make_estimator("gen", chain_graph(4), lambda1=0.0, lambda2=0.3)
        ap = augment(X, y, spec)
        result = solve_admm(ap)
        np.testing.assert_allclose(result.beta_hat, least_squares(ap), atol=1e-10)

    def test_chain_two_matches_cd(self) -> None:
        X, y, spec = _toy(0.5)
        result = solve_admm(augment(X, y, spec), tol=1e-9, max_iter=50_000)
        np.testing.assert_allclose(result.beta_hat, [1.5, 2.5], atol=1e-4)
        assert result.solver is SolverKind.ADMM

    def test_bad_rho(self) -> None:
        X, y, spec = _toy(0.5)
        with pytest.raises(ValidationError):
            solve_admm(augment(X, y, spec), rho_admm=0.0)


class TestPrimalRecovery:
    """Test primal recovery and optimality certificates."""

    def test_zero_dual_is_solve(self) -> None:
        X = np.array([[2.0, 1.0], [0.0, 1.0]])
        y = np.array([3.0, 1.0])
        ap = augment(X, y, make_estimator("gen", chain_graph(2), lambda1=1.0, lambda2=0.0))
        beta = recover_primal(ap, build_dual(ap), np.zeros(1))
        np.testing.assert_allclose(beta, np.linalg.solve(X, y))

    def test_large_lambda_gives_mean(self) -> None:
        X, y, spec = _toy(100.0)
        np.testing.assert_allclose(fit(X, y, spec).beta_hat, [2.0, 2.0], atol=1e-10)

    def test_shrunk_difference(self) -> None:
        X, y, spec = _toy(0.5)
        np.testing.assert_allclose(fit(X, y, spec).beta_hat, [1.5, 2.5], atol=1e-10)

    def test_ols_kkt(self) -> None:
        rng = make_rng(2)
        X, y = rng.standard_normal((10, 3)), rng.standard_normal(10)
        ap = augment(X, y, make_estimator("ols", p=3))
        report = optimality_report(ap, np.linalg.lstsq(X, y, rcond=None)[0])
        assert report["kkt_residual"] <= 1e-8

    def test_gap_keeps_its_sign(self) -> None:
        """With a kernel in X~ the relaxed dual can overshoot the primal."""
        spec = make_estimator("gen", chain_graph(2), lambda1=1.0, lambda2=0.0)
        ap = augment([[1.0, 0.0]], [1.0], spec)
        dp = build_dual(ap, warn=False)
        assert dp.kernel_dim_xtilde == 1
        report = optimality_report(ap, [1.0, 1.0], [1.0], dp)
        assert report["duality_gap"] == pytest.approx(-0.5)

    def test_gap_and_perturbation(self) -> None:
        X, y, spec = _random_problem(0)
        result = fit(X, y, spec, SolverOptions.precise("cd"))
        assert abs(result.duality_gap) <= 1e-6 * (1 + abs(result.objective))
        ap = augment(X, y, spec)
        perturbed = result.beta_hat.copy()
        perturbed[0] += 0.1
        worse = optimality_report(ap, perturbed)["kkt_residual"]
        assert worse > result.kkt_residual


class TestFit:
    """Test the fit entry point across solvers."""

    def test_zero_penalty_is_ols(self) -> None:
        rng = make_rng(5)
        X, y = rng.standard_normal((15, 4)), rng.standard_normal(15)
        spec = make_estimator("gen", chain_graph(4), lambda1=0.0, lambda2=0.0)
        for kind in ("cd", "ip", "admm"):
            result = fit(X, y, spec, SolverOptions(solver=kind))
            np.testing.assert_allclose(
                result.beta_hat, np.linalg.lstsq(X, y, rcond=None)[0], atol=1e-8
            )

    def test_huge_fusion(self) -> None:
        """lambda1 = 1e6 collapses beta onto the best constant fit."""
        rng = make_rng(6)
        X, y = rng.standard_normal((30, 5)), rng.standard_normal(30)
        g = chain_graph(5)
        spec = make_estimator("gen", g, lambda1=1e6, lambda2=0.0)
        beta = fit(X, y, spec, SolverOptions.precise("cd")).beta_hat
        assert np.abs(incidence_matrix(g) @ beta).max() <= 1e-4
        ones = X @ np.ones(5)
        np.testing.assert_allclose(beta, np.full(5, ones @ y / (ones @ ones)), atol=1e-4)

    def test_solvers_agree(self) -> None:
        X, y, spec = _random_problem(1)
        cd = fit(X, y, spec, SolverOptions.precise("cd")).beta_hat
        ip = fit(X, y, spec, SolverOptions(solver="ip", tol=1e-10, max_iter=500)).beta_hat
        admm = fit(X, y, spec, SolverOptions(solver="admm", tol=1e-8, max_iter=100_000))
        np.testing.assert_allclose(ip, cd, atol=1e-4)
        np.testing.assert_allclose(admm.beta_hat, cd, atol=1e-3)

    def test_loss_conventions_agree(self) -> None:
        """A mean_sumsq spec and its half_sumsq rescaling share the minimizer."""
        X, y, _ = _random_problem(2)
        n = X.shape[0]
        g = chain_graph(8)
        mean = make_estimator(
            "gen", g, lambda1=0.05, lambda2=0.01, loss_convention=LossConvention.MEAN_SUMSQ
        )
        half = make_estimator("gen", g, lambda1=0.05 * n / 2, lambda2=0.01 * n / 2)
        options = SolverOptions.precise("cd")
        np.testing.assert_allclose(
            fit(X, y, mean, options).beta_hat, fit(X, y, half, options).beta_hat, atol=1e-8
        )

    def test_auto_picks_cd_when_full_rank(self) -> None:
        X, y, spec = _random_problem(3)
        assert fit(X, y, spec, SolverOptions(solver="auto")).solver is SolverKind.CD

    def test_auto_picks_admm_when_rank_deficient(self) -> None:
        """p > n without a quadratic term leaves X~ with a kernel."""
        rng = make_rng(4)
        X, y = rng.standard_normal((5, 12)), rng.standard_normal(5)
        spec = make_estimator("gen", chain_graph(12), lambda1=0.5, lambda2=0.0)
        result = fit(X, y, spec, SolverOptions(solver="auto"))
        assert result.solver is SolverKind.ADMM

    def test_non_convergence_warns(self) -> None:
        X, y, spec = _random_problem(4)
        with pytest.warns(ConvergenceWarning, match="iteration limit"):
            result = fit(X, y, spec, SolverOptions(solver="cd", tol=1e-14, max_iter=1))
        assert not result.converged
        assert result.beta_hat.shape == (8,)

    def test_options_validation(self) -> None:
        with pytest.raises(ValidationError):
            SolverOptions(tau=0.5)
        with pytest.raises(ValidationError):
            SolverOptions(tol=0.0)
        with pytest.raises(ValueError):
            SolverOptions(solver="newton")

    def test_diagnostics(self) -> None:
        X, y, spec = _toy(0.5)
        diagnostics = fit(X, y, spec).diagnostics()
        assert diagnostics["solver"] == "cd"
        assert diagnostics["converged"] is True

    def test_tv_denoising_oracle(self) -> None:
        """X = I on a chain is 1D total-variation denoising."""
        rng = make_rng(7)
        y = np.repeat([0.0, 2.0, 1.0], [3, 4, 3]) + 0.4 * rng.standard_normal(10)
        g = chain_graph(10)
        lam = 0.7
        D = incidence_matrix(g)
        u = np.zeros(9)
        for _ in range(50_000):
            u = np.clip(u - 0.25 * (D @ (D.T @ u - y)), -lam, lam)
        oracle = y - D.T @ u
        spec = make_estimator("gen", g, lambda1=lam, lambda2=0.0)
        beta = fit(np.eye(10), y, spec, SolverOptions.precise("cd")).beta_hat
        np.testing.assert_allclose(beta, oracle, atol=1e-5)


@pytest.mark.slow
class TestSolverEquivalence:
    """Cross-solver agreement on seeded random instances."""

    @pytest.mark.parametrize("seed", range(50))
    def test_random_instance(self, seed) -> None:
        rng = make_rng(1000 + seed)
        kind = ("chain", "star", "grid")[seed % 3]
        p = 25 if kind == "grid" else int(rng.integers(10, 41))
        n = int(rng.integers(max(p, 20), 61))
        g = grid_graph(5, 5) if kind == "grid" else build_graph(kind, p)
        X = rng.standard_normal((n, p))
        y = X @ rng.standard_normal(p) + 0.5 * rng.standard_normal(n)
        spec = make_estimator(
            "gen", g, lambda1=(0.1, 1.0)[seed % 2], lambda2=(0.0, 0.5)[(seed // 2) % 2]
        )
        cd = fit(X, y, spec, SolverOptions.precise("cd"))
        ip = fit(X, y, spec, SolverOptions(solver="ip", tol=1e-10, max_iter=500))
        admm = fit(X, y, spec, SolverOptions(solver="admm", tol=1e-10, max_iter=200_000))
        np.testing.assert_allclose(ip.beta_hat, cd.beta_hat, atol=1e-4)
        np.testing.assert_allclose(admm.beta_hat, cd.beta_hat, atol=1e-4)
        ap = augment(X, y, spec)
        scale = 1 + np.abs(ap.x_tilde.T @ ap.y_tilde).max()
        for result in (cd, ip, admm):
            slack = 1e-6 * (1 + abs(result.objective))
            assert result.kkt_residual <= 1e-5 * scale, result.solver
            assert abs(result.duality_gap) <= slack, result.solver
            assert objective(X, y, result.beta_hat, spec) == pytest.approx(
                objective(X, y, cd.beta_hat, spec), abs=slack
            ), result.solver
