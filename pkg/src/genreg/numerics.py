"""Dense linear algebra, covariance construction and seeded sampling.

Matrices are 2d numpy arrays and vectors are 1d numpy arrays throughout.
Every stochastic helper takes an explicit seed or ``numpy.random.Generator``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from genreg.errors import DataFileError, SolverError, ValidationError

if TYPE_CHECKING:
    from genreg.graph import Graph

logger = logging.getLogger(__name__)

Array = NDArray[np.float64]

# Default relative singular-value cutoff used for pseudoinverses and ranks.
DEFAULT_REL_TOL = 1e-10

# Eigenvalues of constructed covariances above -EIGEN_CLIP are clipped to 0.
EIGEN_CLIP = 1e-10


# =============================================================================
# Random numbers
# =============================================================================


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    """Return a PCG64 generator for ``seed``.

    Passing an existing generator returns it unchanged, so helpers can be
    chained without re-seeding.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValidationError("an explicit seed is required")
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seeds(base_seed: int, count: int) -> list[int]:
    """Seed schedule ``base_seed + i`` for ``count`` independent workers."""
    return [int(base_seed) + i for i in range(count)]


# =============================================================================
# Linear algebra
# =============================================================================


@dataclass(frozen=True)
class TruncatedSVD:
    """An SVD split into its numerically nonzero and null parts.

    Attributes:
        u: Left singular vectors for the kept singular values (rows x rank).
        s: Kept singular values, descending.
        vt: Right singular vectors for the kept singular values (rank x cols).
        vt_null: Orthonormal basis of the kernel, as rows (cols - rank x cols).
    """

    u: Array
    s: Array
    vt: Array
    vt_null: Array

    @property
    def rank(self) -> int:
        return int(self.s.shape[0])

    def pinv(self) -> Array:
        """Moore-Penrose pseudoinverse assembled from the kept triplets."""
        return (self.vt.T / self.s) @ self.u.T

    def kernel_projection(self) -> Array:
        """Orthogonal projector onto the kernel."""
        return self.vt_null.T @ self.vt_null


def truncated_svd(M: ArrayLike, rel_tol: float = DEFAULT_REL_TOL) -> TruncatedSVD:
    """SVD of ``M`` with singular values below ``rel_tol * s_max`` dropped.

    Raises:
        ValidationError: If ``M`` has non-finite entries.
        SolverError: If the SVD does not converge.
    """
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    rows, cols = A.shape
    if rows == 0 or cols == 0:
        return TruncatedSVD(
            u=np.zeros((rows, 0)),
            s=np.zeros(0),
            vt=np.zeros((0, cols)),
            vt_null=np.eye(cols),
        )
    # The full right basis is only needed when the kernel can't be read off a
    # square Vt.
    full = rows < cols
    try:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=full, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        try:
            U, s, Vt = scipy.linalg.svd(A, full_matrices=full, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"SVD did not converge: {exc}") from exc
    cutoff = rel_tol * s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > cutoff))
    return TruncatedSVD(
        u=U[:, :rank],
        s=s[:rank],
        vt=Vt[:rank],
        vt_null=Vt[rank:],
    )


def pseudoinverse(M: ArrayLike, rel_tol: float = DEFAULT_REL_TOL) -> Array:
    """Moore-Penrose pseudoinverse via SVD.

    Args:
        M: Rectangular matrix with finite entries.
        rel_tol: Singular values below ``rel_tol`` times the largest one are
            treated as zero.

    Returns:
        The ``cols x rows`` pseudoinverse.
    """
    return truncated_svd(M, rel_tol).pinv()


def symmetrize(M: ArrayLike) -> Array:
    A = np.asarray(M, dtype=float)
    return (A + A.T) / 2.0


def min_eigenvalue_sym(M: ArrayLike) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    The input is symmetrized as ``(M + M.T) / 2`` before the eigensolve.

    Raises:
        ValidationError: If ``M`` is not square or has non-finite entries.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    if A.shape[0] == 0:
        raise ValidationError("matrix is empty")
    values = scipy.linalg.eigh(symmetrize(A), eigvals_only=True)
    return float(values[0])


def max_eigenvalue_sym(M: ArrayLike) -> float:
    A = symmetrize(M)
    return float(scipy.linalg.eigh(A, eigvals_only=True)[-1])


def sqrtm_psd(M: ArrayLike) -> Array:
    """Symmetric square root of a PSD matrix, negative eigenvalues clipped."""
    values, vectors = scipy.linalg.eigh(symmetrize(M))
    values = np.clip(values, 0.0, None)
    return (vectors * np.sqrt(values)) @ vectors.T


def soft_threshold(x: ArrayLike, kappa: ArrayLike) -> Array:
    """Elementwise shrinkage ``sign(x) * max(|x| - kappa, 0)``."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)


# =============================================================================
# Covariance construction
# =============================================================================


class CovarianceKind(Enum):
    """Supported covariance constructions."""

    IDENTITY = "identity"
    TOEPLITZ = "toeplitz"
    LAPLACIAN_INVERSE = "laplacian_inverse"


@dataclass(frozen=True)
class CovarianceMatrix:
    """A constructed covariance together with its construction descriptor.

    Attributes:
        matrix: The ``p x p`` symmetric PSD matrix.
        kind: How it was built.
        params: Construction parameters (no seeds: constructions are exact).
    """

    matrix: Array
    kind: CovarianceKind
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def p(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def min_eigenvalue(self) -> float:
        return min_eigenvalue_sym(self.matrix)

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind.value, **self.params}


def _clip_psd(M: Array) -> Array:
    """Symmetrize and clip tiny negative eigenvalues to zero."""
    S = symmetrize(M)
    values, vectors = scipy.linalg.eigh(S)
    if values[0] < -EIGEN_CLIP:
        raise ValidationError(
            f"covariance is not PSD: smallest eigenvalue {values[0]:.3e}"
        )
    if values[0] >= 0:
        return S
    values = np.clip(values, 0.0, None)
    return symmetrize((vectors * values) @ vectors.T)


def toeplitz_covariance(p: int, rho: float) -> CovarianceMatrix:
    """``Sigma_ij = rho ** |i - j|``."""
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    if not abs(rho) < 1:
        raise ValidationError(f"toeplitz correlation must satisfy |rho| < 1, got {rho}")
    column = float(rho) ** np.arange(p, dtype=float)
    matrix = _clip_psd(scipy.linalg.toeplitz(column))
    return CovarianceMatrix(matrix, CovarianceKind.TOEPLITZ, {"p": p, "rho": rho})


def laplacian_inverse_covariance(graph: Graph, c: float = 0.5) -> CovarianceMatrix:
    """Normalized ``(L + cI)^-1`` with unit diagonal."""
    from genreg.graph import laplacian

    if not c > 0:
        raise ValidationError(f"laplacian_inverse shift c must be > 0, got {c}")
    L = laplacian(graph).astype(float)
    inverse = scipy.linalg.inv(L + c * np.eye(graph.p))
    scale = 1.0 / np.sqrt(np.diag(inverse))
    matrix = _clip_psd(inverse * np.outer(scale, scale))
    np.fill_diagonal(matrix, 1.0)
    return CovarianceMatrix(
        matrix,
        CovarianceKind.LAPLACIAN_INVERSE,
        {"p": graph.p, "c": c, "graph": graph.describe()},
    )


def covariance(kind: CovarianceKind | str, **params: Any) -> CovarianceMatrix:
    """Build a covariance matrix by kind.

    Args:
        kind: ``identity`` (takes ``p``), ``toeplitz`` (takes ``p``, ``rho``)
            or ``laplacian_inverse`` (takes ``graph``, ``c``).
        **params: Kind-specific parameters.

    Raises:
        ValidationError: For ``c <= 0``, ``|rho| >= 1`` or missing parameters.
    """
    kind = CovarianceKind(kind)
    try:
        if kind is CovarianceKind.IDENTITY:
            p = int(params["p"])
            if p < 1:
                raise ValidationError(f"p must be >= 1, got {p}")
            return CovarianceMatrix(np.eye(p), kind, {"p": p})
        if kind is CovarianceKind.TOEPLITZ:
            return toeplitz_covariance(int(params["p"]), float(params["rho"]))
        return laplacian_inverse_covariance(params["graph"], float(params.get("c", 0.5)))
    except KeyError as exc:
        raise ValidationError(f"covariance '{kind.value}' requires {exc}") from exc


# =============================================================================
# Sampling and transforms
# =============================================================================


def sample_gaussian_rows(
    n: int,
    sigma: CovarianceMatrix | ArrayLike,
    rng: int | np.random.Generator,
) -> Array:
    """Draw ``n`` i.i.d. ``N(0, Sigma)`` rows.

    Uses the symmetric eigen square root, so singular ``Sigma`` is fine.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    matrix = sigma.matrix if isinstance(sigma, CovarianceMatrix) else np.asarray(sigma)
    root = sqrtm_psd(matrix)
    Z = make_rng(rng).standard_normal((n, matrix.shape[0]))
    return Z @ root


def anscombe(x: ArrayLike) -> Any:
    """Variance-stabilizing transform ``2 * sqrt(x + 3/8)`` for counts.

    Raises:
        ValidationError: If any entry is negative.
    """
    values = np.asarray(x, dtype=float)
    if np.any(values < 0):
        raise ValidationError("anscombe transform requires nonnegative counts")
    out = 2.0 * np.sqrt(values + 0.375)
    return float(out) if out.ndim == 0 else out


# =============================================================================
# Matrix CSV
# =============================================================================


def read_matrix_csv(path: str | Path, ndim: int = 2) -> Array:
    """Read a comma-separated matrix (no header, one row per line)."""
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=ndim)
    except OSError as exc:
        raise DataFileError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataFileError(f"malformed matrix file {path}: {exc}") from exc
    if ndim == 1:
        data = data.reshape(-1)
    return data


def write_matrix_csv(path: str | Path, M: ArrayLike) -> Path:
    """Write a vector (one value per line) or matrix as CSV."""
    path = Path(path)
    data = np.asarray(M, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    np.savetxt(path, data, delimiter=",", fmt="%.17g")
    return path
