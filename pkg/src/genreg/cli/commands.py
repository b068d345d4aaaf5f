"""One function per ``genreg`` subcommand.

Each takes a :class:`RunConfig`, writes its outputs plus ``manifest.json``
into ``config.out`` and returns an exit code.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np

from genreg.config import RunConfig, default_experiment, load_experiment
from genreg.errors import (
    ConvergenceWarning,
    ExitCode,
    RankDeficientWarning,
    ValidationError,
)
from genreg.graph import (
    Graph,
    build_graph,
    graph_spectra,
    incidence_matrix,
    laplacian,
    write_edge_list,
)
from genreg.model_selection import (
    CVPlan,
    cv_summary,
    default_grid,
    grid_search_cv,
    write_cv_table,
)
from genreg.numerics import (
    CovarianceKind,
    CovarianceMatrix,
    covariance,
    make_rng,
    read_matrix_csv,
    sample_gaussian_rows,
    write_matrix_csv,
)
from genreg.penalty import LossConvention, Preset, make_estimator
from genreg.solvers import SolverKind, SolverOptions, fit
from genreg.synthetic import run_study, summarize, write_replicates_csv, write_summary_csv
from genreg.theory import min_eigen_curve, re_condition_trial, theoretical_lambdas

logger = logging.getLogger(__name__)

# ||D beta*||_inf of the runtime-study signal.
BENCH_TV_LINF = 0.3


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    return path


def write_manifest(config: RunConfig, **extra: Any) -> Path:
    manifest = config.to_manifest()
    manifest.update(extra)
    return write_json(config.out / "manifest.json", manifest)


def _load_xy(config: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    X = read_matrix_csv(config.x)  # type: ignore[arg-type]
    y = read_matrix_csv(config.y, ndim=1)  # type: ignore[arg-type]
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    return X, y


def _graph_for(config: RunConfig, p: int) -> Graph | None:
    graph = config.graph_object(p)
    if graph is not None and graph.p != p:
        raise ValidationError(f"graph has p={graph.p} but X has {p} columns")
    if graph is None and config.preset.needs_graph:
        raise ValidationError(f"preset '{config.preset.value}' needs --graph")
    return graph


def _covariance(config: RunConfig, graph: Graph) -> CovarianceMatrix:
    kind = CovarianceKind(config.params.get("cov", "identity"))
    if kind is CovarianceKind.TOEPLITZ:
        return covariance(kind, p=graph.p, rho=float(config.params.get("cov_rho", 0.5)))
    if kind is CovarianceKind.LAPLACIAN_INVERSE:
        return covariance(kind, graph=graph, c=float(config.params.get("cov_c", 0.5)))
    return covariance(kind, p=graph.p)


def _status(converged: bool) -> int:
    return ExitCode.OK if converged else ExitCode.NOT_CONVERGED


# =============================================================================
# Estimation
# =============================================================================


def cmd_fit(config: RunConfig) -> int:
    """Fit one estimator; writes ``beta.csv`` and ``diagnostics.json``."""
    config = config.resolve(required=("x", "y"))
    X, y = _load_xy(config)
    graph = _graph_for(config, X.shape[1])
    spec = make_estimator(
        config.preset,
        graph,
        p=X.shape[1],
        loss_convention=config.loss_convention,
        **config.hyperparams,
    )
    result = fit(X, y, spec, config.solver_options())
    write_matrix_csv(config.out / "beta.csv", result.beta_hat)
    diagnostics = {**result.diagnostics(), "penalty": spec.describe()}
    write_json(config.out / "diagnostics.json", diagnostics)
    write_manifest(config)
    print(
        f"{result.solver.value}: converged={result.converged} iterations={result.iterations} "
        f"kkt={result.kkt_residual:.3e} gap={result.duality_gap:.3e} -> {config.out}"
    )
    return _status(result.converged)


def cmd_cv(config: RunConfig) -> int:
    """Grid-search CV; writes ``cv_table.csv``, ``best.json`` and ``beta.csv``."""
    config = config.resolve(required=("x", "y"))
    X, y = _load_xy(config)
    graph = _graph_for(config, X.shape[1])
    grids = {
        name: config.grids.get(name, default_grid(name))
        for name in config.preset.required_hyperparameters
    }
    plan = CVPlan(
        config.preset, grids, k=config.k, seed=config.seed, loss_convention=config.loss_convention
    )
    result = grid_search_cv(X, y, graph, plan, config.solver_options(), jobs=config.jobs)
    write_cv_table(result, config.out / "cv_table.csv")
    write_json(config.out / "best.json", cv_summary(result))
    write_matrix_csv(config.out / "beta.csv", result.refit.beta_hat)
    write_manifest(config)
    print(f"best {result.best_params} score={result.best_score:.6g} -> {config.out}")
    return _status(result.refit.converged)


# =============================================================================
# Studies
# =============================================================================


def cmd_synth(config: RunConfig) -> int:
    """Resampling study; writes ``replicates.csv`` and ``summary.csv``."""
    config = config.resolve()
    design = load_experiment(config.experiment) if config.experiment else default_experiment()
    if "replicates" in config.params:
        design = replace(design, replicates=int(config.params["replicates"]))
    records = run_study(design, jobs=config.jobs)
    rows = summarize(records)
    write_replicates_csv(records, config.out / "replicates.csv")
    write_summary_csv(rows, config.out / "summary.csv")
    write_manifest(config, experiment=design.describe())
    failed = sum(1 for r in records if r.failed)
    if failed:
        logger.warning("%d of %d estimator fits failed and were excluded", failed, len(records))
    for row in rows:
        print(
            f"{row.estimator:>13}: estimation median {row.estimation_median:.4g} "
            f"prediction median {row.prediction_median:.4g} ({row.n_failed} failed)"
        )
    return ExitCode.OK


def _bench_points(config: RunConfig) -> list[dict[str, Any]]:
    if "points" in config.params:
        return [dict(point) for point in config.params["points"]]
    sizes = config.params.get("sizes", "250,500,1000")
    if isinstance(sizes, str):
        sizes = [int(v) for v in sizes.split(",") if v.strip()]
    n = int(config.params.get("n", 2000))
    kind = str(config.params.get("kind", "chain"))
    return [{"n": n, "p": int(p), "graph": kind} for p in sizes]


def _bench_solvers(config: RunConfig) -> list[SolverKind]:
    solvers = config.params.get("solvers", "cd,ip,admm")
    if isinstance(solvers, str):
        solvers = [s for s in solvers.split(",") if s.strip()]
    return [SolverKind(s.strip()) for s in solvers]


BENCH_COLUMNS = (
    "n",
    "p",
    "graph",
    "solver",
    "median_seconds",
    "repeats",
    "censored",
    "converged",
    "iterations",
)


def bench_point(
    n: int,
    graph: Graph,
    solvers: list[SolverKind],
    repeats: int,
    timeout: float | None,
    seed: int,
) -> list[dict[str, Any]]:
    """Median wall time per solver on one GEN instance at the theory tuning.

    The signal is ``0.3`` on the first half of the vertices and 0 elsewhere,
    so ``||D beta*||_inf = 0.3`` on any graph; ``lambda2 = lambda1 / 2.4``.
    """
    rng = make_rng(seed)
    p = graph.p
    beta_star = np.where(np.arange(p) < p // 2, BENCH_TV_LINF, 0.0)
    sigma_cov = covariance(CovarianceKind.IDENTITY, p=p)
    X = sample_gaussian_rows(n, sigma_cov, rng)
    y = X @ beta_star + rng.standard_normal(n)
    tuning = theoretical_lambdas(1.0, sigma_cov, graph, n, tv_linf=BENCH_TV_LINF)
    spec = make_estimator(
        Preset.GEN,
        graph,
        loss_convention=LossConvention.MEAN_SUMSQ,
        lambda1=tuning.lambda1,
        lambda2=tuning.lambda2,
    )
    rows = []
    for solver in solvers:
        options = replace(SolverOptions.benchmark_defaults(solver), time_limit=timeout)
        times, converged, censored, iterations = [], True, False, 0
        for _ in range(repeats):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                warnings.simplefilter("ignore", RankDeficientWarning)
                result = fit(X, y, spec, options)
            times.append(result.wall_time)
            converged &= result.converged
            censored |= result.dual.timed_out
            iterations = result.iterations
        rows.append(
            {
                "n": n,
                "p": p,
                "graph": graph.kind.value,
                "solver": solver.value,
                "median_seconds": statistics.median(times),
                "repeats": repeats,
                "censored": censored,
                "converged": converged,
                "iterations": iterations,
            }
        )
        logger.info("bench n=%d p=%d %s: %.3fs", n, p, solver.value, rows[-1]["median_seconds"])
    return rows


def cmd_bench(config: RunConfig) -> int:
    """Solver runtimes; writes ``runtimes.csv``."""
    config = config.resolve()
    solvers = _bench_solvers(config)
    repeats = int(config.params.get("repeats", 3))
    rows = []
    for index, point in enumerate(_bench_points(config)):
        graph = build_graph(point.get("graph", "chain"), int(point["p"]))
        rows.extend(
            bench_point(
                int(point["n"]), graph, solvers, repeats, config.timeout, config.seed + index
            )
        )
    path = config.out / "runtimes.csv"
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    **row,
                    "median_seconds": repr(row["median_seconds"]),
                    "censored": str(row["censored"]).lower(),
                    "converged": str(row["converged"]).lower(),
                }
            )
    write_manifest(config)
    print(f"{len(rows)} timings -> {path}")
    return ExitCode.OK


# =============================================================================
# Theory and graphs
# =============================================================================


def _graph_or_default(config: RunConfig, default: str) -> Graph:
    if config.graph is None and "kind" in config.params:
        return build_graph(config.params["kind"], *_ints(config.params.get("p", 10)))
    graph = config.graph_object(_size(config))
    return graph if graph is not None else build_graph(*_split_spec(default))


def _ints(value: Any) -> list[int]:
    if isinstance(value, str):
        return [int(v) for v in value.replace("x", ",").split(",") if v.strip()]
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(value)]


def _size(config: RunConfig) -> int | None:
    value = str(config.params.get("p", ""))
    return int(value) if value.isdigit() else None


def _split_spec(spec: str) -> tuple[str, int]:
    kind, _, size = spec.partition(":")
    return kind, int(size)


def cmd_eigen_curve(config: RunConfig) -> int:
    """``gamma_min(Sigma / 64 + lambda2 L)``; writes ``eigen_curve.csv``."""
    config = config.resolve()
    graph = _graph_or_default(config, "chain:100")
    grid = config.grids.get("lambda2", tuple(np.linspace(0.0, 1.0, 21)))
    curve = min_eigen_curve(_covariance(config, graph), laplacian(graph), grid)
    path = curve.write_csv(config.out / "eigen_curve.csv")
    write_manifest(config)
    print(
        f"{len(curve.lambda2)} points, nondecreasing={curve.is_nondecreasing()} "
        f"concave={curve.is_concave()} -> {path}"
    )
    return ExitCode.OK


def cmd_re_check(config: RunConfig) -> int:
    """Monte Carlo RE check; writes ``re_check.csv``."""
    config = config.resolve()
    graph = _graph_or_default(config, "chain:20")
    n = int(config.params.get("n", 200))
    trials = int(config.params.get("trials", 50))
    directions = int(config.params.get("directions", 20))
    fraction = re_condition_trial(
        _covariance(config, graph), graph, n, trials, directions, config.seed, config.jobs
    )
    path = config.out / "re_check.csv"
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["n", "p", "trials", "directions", "pass_fraction"])
        writer.writerow([n, graph.p, trials, directions, repr(fraction)])
    write_manifest(config)
    print(f"pass_fraction={fraction:.4f} -> {path}")
    return ExitCode.OK


def cmd_graph(config: RunConfig) -> int:
    """Dump a graph's edges, incidence matrix, Laplacian and spectra."""
    config = config.resolve()
    graph = _graph_or_default(config, "chain:10")
    spectra = graph_spectra(graph)
    write_edge_list(graph, config.out / "edges.txt")
    write_matrix_csv(config.out / "incidence.csv", incidence_matrix(graph))
    write_matrix_csv(config.out / "laplacian.csv", laplacian(graph))
    write_json(
        config.out / "spectra.json",
        {"p": graph.p, "m": graph.m, "kind": graph.kind.value, **spectra.as_dict()},
    )
    write_manifest(config)
    print(f"p={graph.p} m={graph.m} rho={spectra.rho:.6g} -> {config.out}")
    return ExitCode.OK


def cmd_theory(config: RunConfig) -> int:
    """Theoretical tuning parameters; writes ``theory.json``."""
    config = config.resolve()
    graph = _graph_or_default(config, "chain:100")
    n = int(config.params.get("n", 100))
    sigma = float(config.params.get("sigma", 1.0))
    tv_linf = float(config.params.get("tv_linf", BENCH_TV_LINF))
    tuning = theoretical_lambdas(sigma, _covariance(config, graph), graph, n, tv_linf=tv_linf)
    payload = tuning.as_dict()
    write_json(config.out / "theory.json", payload)
    write_manifest(config)
    lambda2 = tuning.lambda2 if math.isfinite(tuning.lambda2) else "inf"
    print(f"lambda1={tuning.lambda1:.6g} lambda2={lambda2} -> {config.out}")
    return ExitCode.OK


COMMANDS = {
    "fit": cmd_fit,
    "cv": cmd_cv,
    "synth": cmd_synth,
    "bench": cmd_bench,
    "eigen-curve": cmd_eigen_curve,
    "re-check": cmd_re_check,
    "graph": cmd_graph,
    "theory": cmd_theory,
}
