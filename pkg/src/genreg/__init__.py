"""
genreg - Generalized Elastic Net regression on graphs.

The Generalized Elastic Net penalizes least squares with a weighted
l1 term on graph differences and a quadratic Laplacian term:

    (1/2)||y - X beta||^2 + lambda1 ||diag(w) D beta||_1 + lambda2 beta' L beta

Quick Start:
    >>> import numpy as np
    >>> from genreg import build_graph, fit, make_estimator

    >>> g = build_graph("chain", 3)
    >>> spec = make_estimator("gen", g, lambda1=1.0, lambda2=0.1)
    >>> result = fit(np.eye(3), np.array([1.0, 1.0, 4.0]), spec)
    >>> result.converged
    True

Presets:
    - ``ols``, ``lasso``, ``elastic_net``: no graph needed
    - ``fused_lasso``, ``smooth_lasso``, ``gen``: penalize graph differences
    - Solvers: ``cd`` (coordinate descent), ``ip`` (interior point),
      ``admm`` and ``auto``
"""

from genreg.errors import (
    ConvergenceWarning,
    DataFileError,
    DegenerateInputError,
    ExitCode,
    GenRegError,
    RankDeficientWarning,
    SolverError,
    ValidationError,
)
from genreg.graph import (
    Graph,
    GraphKind,
    GraphSpectra,
    barbell_graph,
    build_graph,
    chain_graph,
    compatibility_ratio,
    complete_graph,
    graph_spectra,
    grid_graph,
    incidence_matrix,
    laplacian,
    parse_graph_spec,
    read_edge_list,
    star_graph,
    write_edge_list,
)
from genreg.model_selection import (
    CVPlan,
    CVResult,
    grid_search_cv,
    holdout_search,
    kfold_indices,
)
from genreg.numerics import (
    CovarianceKind,
    CovarianceMatrix,
    covariance,
    pseudoinverse,
    sample_gaussian_rows,
    soft_threshold,
    truncated_svd,
)
from genreg.penalty import (
    AugmentedProblem,
    LossConvention,
    PenaltySpec,
    Preset,
    augment,
    make_estimator,
    objective,
)
from genreg.solvers import (
    DualProblem,
    DualSolution,
    FitResult,
    SolverKind,
    SolverOptions,
    build_dual,
    fit,
    solve_admm,
    solve_cd,
    solve_ip,
)
from genreg.synthetic import (
    SignalFamily,
    SignalSpec,
    StudyDesign,
    make_signal,
    run_study,
    signal_stats,
    simulate,
    summarize,
)
from genreg.theory import (
    EigenCurve,
    TheoryTuning,
    min_eigen_curve,
    re_condition_trial,
    theoretical_lambdas,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # Errors
    "ConvergenceWarning",
    "DataFileError",
    "DegenerateInputError",
    "ExitCode",
    "GenRegError",
    "RankDeficientWarning",
    "SolverError",
    "ValidationError",
    # Graphs
    "Graph",
    "GraphKind",
    "GraphSpectra",
    "barbell_graph",
    "build_graph",
    "chain_graph",
    "compatibility_ratio",
    "complete_graph",
    "graph_spectra",
    "grid_graph",
    "incidence_matrix",
    "laplacian",
    "parse_graph_spec",
    "read_edge_list",
    "star_graph",
    "write_edge_list",
    # Numerics
    "CovarianceKind",
    "CovarianceMatrix",
    "covariance",
    "pseudoinverse",
    "sample_gaussian_rows",
    "soft_threshold",
    "truncated_svd",
    # Penalties
    "AugmentedProblem",
    "LossConvention",
    "PenaltySpec",
    "Preset",
    "augment",
    "make_estimator",
    "objective",
    # Solvers
    "DualProblem",
    "DualSolution",
    "FitResult",
    "SolverKind",
    "SolverOptions",
    "build_dual",
    "fit",
    "solve_admm",
    "solve_cd",
    "solve_ip",
    # Model selection
    "CVPlan",
    "CVResult",
    "grid_search_cv",
    "holdout_search",
    "kfold_indices",
    # Synthetic studies
    "SignalFamily",
    "SignalSpec",
    "StudyDesign",
    "make_signal",
    "run_study",
    "signal_stats",
    "simulate",
    "summarize",
    # Theory
    "EigenCurve",
    "TheoryTuning",
    "min_eigen_curve",
    "re_condition_trial",
    "theoretical_lambdas",
]
