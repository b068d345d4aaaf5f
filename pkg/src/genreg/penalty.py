"""Unified penalty model for GEN and its baselines.

Every estimator is written as

    loss(beta) + lambda1 * sum_j w_j |(A beta)_j| + lambda2 * ||B beta||_2^2

with ``loss`` either ``(1/2)||y - X beta||^2`` (``half_sumsq``, the solver
convention) or ``(1/n)||y - X beta||^2`` (``mean_sumsq``, the convention of
the error bounds). Augmenting ``X`` with ``sqrt(2 lambda2) B`` folds the
quadratic part into the loss and leaves an l1-only problem.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from genreg.errors import ValidationError
from genreg.graph import Graph, incidence_matrix
from genreg.numerics import Array

logger = logging.getLogger(__name__)


class LossConvention(Enum):
    """Scaling of the squared-error loss."""

    HALF_SUMSQ = "half_sumsq"
    MEAN_SUMSQ = "mean_sumsq"


class Preset(Enum):
    """Estimator presets sharing the penalty representation."""

    OLS = "ols"
    LASSO = "lasso"
    ELASTIC_NET = "elastic_net"
    FUSED_LASSO = "fused_lasso"
    SMOOTH_LASSO = "smooth_lasso"
    GEN = "gen"

    @property
    def required_hyperparameters(self) -> tuple[str, ...]:
        """Hyperparameter names the preset reads."""
        return _REQUIRED[self]

    @property
    def needs_graph(self) -> bool:
        return self in (Preset.FUSED_LASSO, Preset.SMOOTH_LASSO, Preset.GEN)


_REQUIRED: dict[Preset, tuple[str, ...]] = {
    Preset.OLS: (),
    Preset.LASSO: ("lambdaL",),
    Preset.ELASTIC_NET: ("lambdaE", "lambdaL"),
    Preset.FUSED_LASSO: ("lambda1", "lambdaL"),
    Preset.SMOOTH_LASSO: ("lambda2", "lambdaL"),
    Preset.GEN: ("lambda2", "lambda1"),
}

HYPERPARAMETER_NAMES = ("lambda1", "lambda2", "lambdaL", "lambdaE")


@dataclass(frozen=True, eq=False)
class PenaltySpec:
    """Weighted l1 plus quadratic penalty with its loss convention.

    Attributes:
        l1_matrix: ``A`` (``m1 x p``).
        l1_weights: Positive row weights ``w`` (length ``m1``).
        lambda1: l1 strength.
        l2_matrix: ``B`` (``m2 x p``).
        lambda2: Quadratic strength.
        loss_convention: ``half_sumsq`` or ``mean_sumsq``.
        preset: The preset that built this penalty, if any.
        hyperparams: The preset hyperparameters as given.
    """

    l1_matrix: Array
    l1_weights: Array
    lambda1: float
    l2_matrix: Array
    lambda2: float
    loss_convention: LossConvention = LossConvention.HALF_SUMSQ
    preset: Preset | None = None
    hyperparams: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.l1_matrix, dtype=float))
        B = np.atleast_2d(np.asarray(self.l2_matrix, dtype=float))
        w = np.asarray(self.l1_weights, dtype=float).reshape(-1)
        object.__setattr__(self, "l1_matrix", A)
        object.__setattr__(self, "l2_matrix", B)
        object.__setattr__(self, "l1_weights", w)
        if self.lambda1 < 0:
            raise ValidationError(f"lambda1 must be >= 0, got {self.lambda1}")
        if self.lambda2 < 0:
            raise ValidationError(f"lambda2 must be >= 0, got {self.lambda2}")
        if w.shape[0] != A.shape[0]:
            raise ValidationError(
                f"l1_weights has {w.shape[0]} entries for {A.shape[0]} l1 rows"
            )
        if np.any(w <= 0):
            raise ValidationError("l1 weights must be > 0")
        if A.shape[1] != B.shape[1]:
            raise ValidationError(
                f"l1 and l2 matrices disagree on p: {A.shape[1]} vs {B.shape[1]}"
            )

    @property
    def p(self) -> int:
        return int(self.l1_matrix.shape[1])

    @property
    def box(self) -> Array:
        """Per-row dual box radii ``lambda1 * w``."""
        return self.lambda1 * self.l1_weights

    def describe(self) -> dict[str, Any]:
        return {
            "preset": self.preset.value if self.preset else None,
            "hyperparams": dict(self.hyperparams),
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "loss_convention": self.loss_convention.value,
            "m1": int(self.l1_matrix.shape[0]),
            "m2": int(self.l2_matrix.shape[0]),
        }


@dataclass(frozen=True, eq=False)
class AugmentedProblem:
    """``(1/2)||y_tilde - x_tilde beta||^2 + lambda1 sum_j w_j |(A beta)_j|``.

    Attributes:
        x_tilde: ``X`` stacked over ``sqrt(2 lambda2) B``.
        y_tilde: ``y`` padded with zeros.
        l1_matrix: ``A``.
        l1_weights: ``w``.
        lambda1: l1 strength in the half-sum-of-squares scaling.
        n: Number of original observations.
    """

    x_tilde: Array
    y_tilde: Array
    l1_matrix: Array
    l1_weights: Array
    lambda1: float
    n: int

    @property
    def p(self) -> int:
        return int(self.x_tilde.shape[1])

    @property
    def m1(self) -> int:
        return int(self.l1_matrix.shape[0])

    @property
    def box(self) -> Array:
        return self.lambda1 * self.l1_weights

    def objective(self, beta: ArrayLike) -> float:
        """Primal objective of the augmented problem."""
        beta = np.asarray(beta, dtype=float)
        residual = self.y_tilde - self.x_tilde @ beta
        return float(
            0.5 * residual @ residual
            + np.sum(self.box * np.abs(self.l1_matrix @ beta))
        )


# =============================================================================
# Presets
# =============================================================================


def _hyper(values: dict[str, Any], name: str) -> float:
    if name not in values or values[name] is None:
        raise ValidationError(f"missing hyperparameter '{name}'")
    value = float(values[name])
    if value < 0 or math.isnan(value):
        raise ValidationError(f"{name} must be >= 0, got {value}")
    return value


def make_estimator(
    preset: Preset | str,
    graph: Graph | None = None,
    *,
    p: int | None = None,
    operator: ArrayLike | None = None,
    loss_convention: LossConvention | str = LossConvention.HALF_SUMSQ,
    **hyperparams: float,
) -> PenaltySpec:
    """Build the penalty of a named estimator.

    Args:
        preset: ``ols``, ``lasso``, ``elastic_net``, ``fused_lasso``,
            ``smooth_lasso`` or ``gen``.
        graph: Graph whose incidence matrix enters the penalty.
        p: Dimension when no graph or operator is given.
        operator: Explicit difference operator used in place of the incidence
            matrix (``np.eye(p)`` turns GEN into the Elastic Net).
        loss_convention: Loss scaling the hyperparameters refer to.
        **hyperparams: ``lambda1``, ``lambda2``, ``lambdaL``, ``lambdaE`` as
            the preset requires.

    Raises:
        ValidationError: On a missing graph, missing or negative
            hyperparameters.

    Examples:
        >>> spec = make_estimator("gen", chain_graph(3), lambda1=1.0, lambda2=0.5)
        >>> spec.l1_matrix.shape
        (2, 3)
    """
    try:
        preset = Preset(preset)
    except ValueError as exc:
        raise ValidationError(f"unknown preset: {preset!r}") from exc
    convention = LossConvention(loss_convention)

    D: Array | None = None
    if operator is not None:
        D = np.atleast_2d(np.asarray(operator, dtype=float))
    elif graph is not None:
        D = incidence_matrix(graph)
    if preset.needs_graph and D is None:
        raise ValidationError(f"preset '{preset.value}' requires a graph")
    if D is not None:
        dim = D.shape[1]
    elif p is not None:
        dim = int(p)
    else:
        raise ValidationError("dimension p is required when no graph is given")
    if graph is not None and graph.p != dim:
        raise ValidationError(f"graph has p={graph.p} but operator has {dim} columns")

    values = {name: _hyper(hyperparams, name) for name in preset.required_hyperparameters}
    identity = np.eye(dim)
    empty = np.zeros((0, dim))

    def spec(A: Array, w: Array, lam1: float, B: Array, lam2: float) -> PenaltySpec:
        return PenaltySpec(A, w, lam1, B, lam2, convention, preset, values)

    if preset is Preset.OLS:
        return spec(empty, np.zeros(0), 0.0, empty, 0.0)
    if preset is Preset.LASSO:
        return spec(identity, np.ones(dim), values["lambdaL"], empty, 0.0)
    if preset is Preset.ELASTIC_NET:
        return spec(identity, np.ones(dim), values["lambdaL"], identity, values["lambdaE"])
    assert D is not None
    if preset is Preset.SMOOTH_LASSO:
        return spec(identity, np.ones(dim), values["lambdaL"], D, values["lambda2"])
    if preset is Preset.GEN:
        return spec(D, np.ones(D.shape[0]), values["lambda1"], D, values["lambda2"])

    lam1, lam_l = values["lambda1"], values["lambdaL"]
    if lam1 == 0:
        # Degenerates to the Lasso; avoids 0/0 weights.
        return spec(identity, np.ones(dim), lam_l, empty, 0.0)
    if lam_l == 0:
        return spec(D, np.ones(D.shape[0]), lam1, empty, 0.0)
    A = np.vstack([D, identity])
    w = np.concatenate([np.ones(D.shape[0]), np.full(dim, lam_l / lam1)])
    return spec(A, w, lam1, empty, 0.0)


# =============================================================================
# Augmentation and evaluation
# =============================================================================


def to_half_sumsq(spec: PenaltySpec, n: int) -> PenaltySpec:
    """Rescale a ``mean_sumsq`` spec to the ``half_sumsq`` convention.

    Multiplying the whole objective by ``n / 2`` leaves the minimizer
    unchanged and multiplies both lambdas by ``n / 2``.
    """
    if spec.loss_convention is LossConvention.HALF_SUMSQ:
        return spec
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    factor = n / 2.0
    return replace(
        spec,
        lambda1=spec.lambda1 * factor,
        lambda2=spec.lambda2 * factor,
        loss_convention=LossConvention.HALF_SUMSQ,
    )


def augment(X: ArrayLike, y: ArrayLike, spec: PenaltySpec) -> AugmentedProblem:
    """Fold the quadratic penalty into the design.

    Raises:
        ValidationError: On dimension mismatches.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    n, p = X.shape
    if y.shape[0] != n:
        raise ValidationError(f"X has {n} rows but y has {y.shape[0]} entries")
    if spec.p != p:
        raise ValidationError(f"penalty is for p={spec.p} but X has {p} columns")
    half = to_half_sumsq(spec, n)
    if half.lambda2 > 0 and half.l2_matrix.shape[0] > 0:
        extra = math.sqrt(2.0 * half.lambda2) * half.l2_matrix
        x_tilde = np.vstack([X, extra])
        y_tilde = np.concatenate([y, np.zeros(extra.shape[0])])
    else:
        x_tilde, y_tilde = X.copy(), y.copy()
    return AugmentedProblem(
        x_tilde=x_tilde,
        y_tilde=y_tilde,
        l1_matrix=half.l1_matrix,
        l1_weights=half.l1_weights,
        lambda1=half.lambda1,
        n=n,
    )


def signal_penalty_value(beta: ArrayLike, spec: PenaltySpec) -> float:
    """``lambda1 * sum_j w_j |(A beta)_j| + lambda2 * ||B beta||^2``."""
    beta = np.asarray(beta, dtype=float)
    l1 = float(np.sum(spec.l1_weights * np.abs(spec.l1_matrix @ beta)))
    quad = spec.l2_matrix @ beta
    return spec.lambda1 * l1 + spec.lambda2 * float(quad @ quad)


def objective(X: ArrayLike, y: ArrayLike, beta: ArrayLike, spec: PenaltySpec) -> float:
    """Loss plus penalty under ``spec.loss_convention``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    residual = np.asarray(y, dtype=float) - X @ np.asarray(beta, dtype=float)
    rss = float(residual @ residual)
    if spec.loss_convention is LossConvention.HALF_SUMSQ:
        loss = 0.5 * rss
    else:
        loss = rss / X.shape[0]
    return loss + signal_penalty_value(beta, spec)
