"""Graphs and the graph-dependent linear algebra behind the GEN penalty.

Edges are 0-based unordered pairs. The incidence matrix puts ``+1`` at the
smaller endpoint and ``-1`` at the larger one, and each constructor has a
fixed edge enumeration so every derived matrix is bit-reproducible:

- chain: ``(i, i + 1)`` for ``i = 0 .. p - 2``
- grid: axis by axis; within an axis, vertices in row-major order, each
  joined to its successor along that axis
- star: ``(0, j)`` for ``j = 1 .. p - 1``
- complete: all pairs in lexicographic order
- barbell: clique A on ``[0, k)``, then the path from ``k - 1`` through the
  path vertices to ``p - k``, then clique B on ``[p - k, p)``
"""

from __future__ import annotations

import itertools
import logging
import math
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
from numpy.typing import ArrayLike

from genreg.errors import DataFileError, DegenerateInputError, ValidationError
from genreg.numerics import DEFAULT_REL_TOL, Array, truncated_svd

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


class GraphKind(Enum):
    """Graph families with a canonical constructor."""

    CHAIN = "chain"
    GRID = "grid"
    STAR = "star"
    COMPLETE = "complete"
    BARBELL = "barbell"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph on vertices ``0 .. p - 1``.

    Attributes:
        p: Number of vertices.
        edges: Edge list; row order of the incidence matrix.
        kind: Constructor family, ``CUSTOM`` for graphs read from files.
        shape: Constructor parameters (grid dimensions, barbell ``(k, l)``).

    Raises:
        ValidationError: On out-of-range endpoints, self-loops or repeated
            edges.
    """

    p: int
    edges: tuple[Edge, ...]
    kind: GraphKind = GraphKind.CUSTOM
    shape: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValidationError(f"graph needs at least one vertex, got p={self.p}")
        seen: set[Edge] = set()
        for i, j in self.edges:
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValidationError(f"edge ({i}, {j}) has an endpoint outside [0, {self.p})")
            if i == j:
                raise ValidationError(f"self-loop at vertex {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValidationError(f"repeated edge ({i}, {j})")
            seen.add(key)

    @property
    def m(self) -> int:
        """Number of edges."""
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        counts = np.zeros(self.p, dtype=np.int64)
        for i, j in self.edges:
            counts[i] += 1
            counts[j] += 1
        return counts

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max(initial=0))

    def describe(self) -> dict[str, Any]:
        """JSON-friendly summary used in manifests."""
        return {"kind": self.kind.value, "shape": list(self.shape), "p": self.p, "m": self.m}


# =============================================================================
# Constructors
# =============================================================================


def chain_graph(p: int) -> Graph:
    if p < 1:
        raise ValidationError(f"chain needs p >= 1, got {p}")
    return Graph(p, tuple((i, i + 1) for i in range(p - 1)), GraphKind.CHAIN, (p,))


def grid_graph(*dims: int) -> Graph:
    """r-dimensional lattice with sizes ``d1 x ... x dr``."""
    if not dims:
        raise ValidationError("grid needs at least one dimension")
    if any(d < 1 for d in dims):
        raise ValidationError(f"grid dimensions must be >= 1, got {dims}")
    p = math.prod(dims)
    strides = [math.prod(dims[k + 1 :]) for k in range(len(dims))]
    edges: list[Edge] = []
    for axis, (size, stride) in enumerate(zip(dims, strides, strict=True)):
        for v in range(p):
            if (v // stride) % size < size - 1:
                edges.append((v, v + stride))
        logger.debug("grid axis %d contributes edges up to %d", axis, len(edges))
    return Graph(p, tuple(edges), GraphKind.GRID, tuple(dims))


def star_graph(p: int) -> Graph:
    """Star with center vertex 0."""
    if p < 2:
        raise ValidationError(f"star needs p >= 2, got {p}")
    return Graph(p, tuple((0, j) for j in range(1, p)), GraphKind.STAR, (p,))


def complete_graph(p: int) -> Graph:
    if p < 1:
        raise ValidationError(f"complete graph needs p >= 1, got {p}")
    return Graph(
        p, tuple(itertools.combinations(range(p), 2)), GraphKind.COMPLETE, (p,)
    )


def barbell_graph(k: int, path_length: int) -> Graph:
    """Two k-cliques joined by a path of ``path_length`` edges.

    The path starts at the last vertex of clique A and ends at the first
    vertex of clique B, so ``p = 2k + path_length - 1``.
    """
    if k < 2:
        raise ValidationError(f"barbell clique size must be >= 2, got {k}")
    if path_length < 1:
        raise ValidationError(f"barbell path length must be >= 1, got {path_length}")
    p = 2 * k + path_length - 1
    clique_a = list(itertools.combinations(range(k), 2))
    path = [(v, v + 1) for v in range(k - 1, k - 1 + path_length)]
    clique_b = list(itertools.combinations(range(p - k, p), 2))
    return Graph(p, tuple(clique_a + path + clique_b), GraphKind.BARBELL, (k, path_length))


_BUILDERS = {
    GraphKind.CHAIN: chain_graph,
    GraphKind.GRID: grid_graph,
    GraphKind.STAR: star_graph,
    GraphKind.COMPLETE: complete_graph,
    GraphKind.BARBELL: barbell_graph,
}


def build_graph(kind: GraphKind | str, *params: int) -> Graph:
    """Build a graph from its family and integer parameters.

    Args:
        kind: ``chain``/``star``/``complete`` take ``p``; ``grid`` takes
            ``d1, ..., dr``; ``barbell`` takes ``k, path_length``.
        *params: The kind-specific integers.

    Raises:
        ValidationError: For unknown kinds or parameters below the minimums.

    Examples:
        >>> build_graph("chain", 3).edges
        ((0, 1), (1, 2))
    """
    try:
        kind = GraphKind(kind)
        builder = _BUILDERS[kind]
    except (ValueError, KeyError) as exc:
        raise ValidationError(f"unknown graph kind: {kind!r}") from exc
    try:
        return builder(*(int(x) for x in params))  # type: ignore[operator]
    except TypeError as exc:
        raise ValidationError(f"wrong parameters for {kind.value}: {params}") from exc


def parse_graph_spec(text: str, p: int | None = None) -> Graph:
    """Graph from an inline preset (``chain:100``, ``grid:11x11``,
    ``barbell:3x4``) or from an edge-list file path.

    A bare ``chain``, ``star`` or ``complete`` takes its size from ``p``.
    """
    bare = text.strip()
    if bare in {"chain", "star", "complete"}:
        if p is None:
            raise ValidationError(f"graph preset '{bare}' needs a size, e.g. {bare}:10")
        return build_graph(bare, p)
    match = re.fullmatch(r"\s*([a-z]+)\s*[:=]\s*([\dx,\s]+)\s*", text)
    if match and match.group(1) in {k.value for k in _BUILDERS}:
        params = [int(tok) for tok in re.split(r"[x,\s]+", match.group(2).strip()) if tok]
        return build_graph(match.group(1), *params)
    path = Path(text)
    if path.exists():
        return read_edge_list(path)
    raise ValidationError(f"graph '{text}' is neither a preset nor an existing file")


# =============================================================================
# Derived matrices
# =============================================================================


def incidence_matrix(g: Graph) -> Array:
    """Signed ``m x p`` incidence matrix, rows in edge-list order."""
    D = np.zeros((g.m, g.p))
    for row, (i, j) in enumerate(g.edges):
        D[row, min(i, j)] = 1.0
        D[row, max(i, j)] = -1.0
    return D


def laplacian(g: Graph) -> np.ndarray:
    """Integer Laplacian ``degree - adjacency``, equal to ``D.T @ D``."""
    L = np.diag(g.degrees())
    for i, j in g.edges:
        L[i, j] -= 1
        L[j, i] -= 1
    return L


def connected_components(g: Graph) -> int:
    """Number of connected components from a graph traversal."""
    if g.m == 0:
        return g.p
    rows, cols = zip(*g.edges, strict=True)
    adjacency = scipy.sparse.coo_matrix(
        (np.ones(g.m), (rows, cols)), shape=(g.p, g.p)
    )
    count, _ = scipy.sparse.csgraph.connected_components(adjacency, directed=False)
    return int(count)


@dataclass(frozen=True)
class GraphSpectra:
    """Pseudoinverse-derived quantities of a graph's incidence matrix.

    Attributes:
        laplacian: ``D.T @ D`` (``p x p``).
        pinv_incidence: ``D^+`` (``p x m``).
        kernel_projection: Projector onto ``ker(D)``.
        n_components: Kernel dimension, equal to the component count.
        max_degree: Largest vertex degree.
        rho: Inverse scaling factor, the largest column norm of ``D^+``.
    """

    laplacian: Array
    pinv_incidence: Array
    kernel_projection: Array
    n_components: int
    max_degree: int
    rho: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "n_components": self.n_components,
            "max_degree": self.max_degree,
            "rho": self.rho,
        }


def graph_spectra(g: Graph, svd_tol: float = DEFAULT_REL_TOL) -> GraphSpectra:
    """Compute ``D^+``, the kernel projector and the inverse scaling factor.

    Args:
        g: The graph.
        svd_tol: Relative singular-value cutoff in ``(0, 1)``.
    """
    if not 0 < svd_tol < 1:
        raise ValidationError(f"svd_tol must be in (0, 1), got {svd_tol}")
    D = incidence_matrix(g)
    L = laplacian(g).astype(float)
    if g.m == 0:
        return GraphSpectra(L, np.zeros((g.p, 0)), np.eye(g.p), g.p, 0, 0.0)
    svd = truncated_svd(D, svd_tol)
    pinv = svd.pinv()
    rho = float(np.linalg.norm(pinv, axis=0).max())
    return GraphSpectra(
        laplacian=L,
        pinv_incidence=pinv,
        kernel_projection=svd.kernel_projection(),
        n_components=g.p - svd.rank,
        max_degree=g.max_degree,
        rho=rho,
    )


def compatibility_ratio(g: Graph, S: Sequence[int], beta: ArrayLike) -> float:
    """``sqrt(|S|) * ||beta||_2 / ||(D beta)_S||_1`` for an edge subset ``S``.

    Every value is an upper bound on the compatibility factor of ``S``.

    Raises:
        ValidationError: If ``S`` is empty, repeats edges or is out of range.
        DegenerateInputError: If ``(D beta)_S`` vanishes.
    """
    S = list(S)
    if not S:
        raise ValidationError("edge subset S must be nonempty")
    if len(set(S)) != len(S) or min(S) < 0 or max(S) >= g.m:
        raise ValidationError(f"edge subset must hold distinct indices in [0, {g.m})")
    beta = np.asarray(beta, dtype=float)
    restricted = np.abs(incidence_matrix(g)[S] @ beta).sum()
    if restricted == 0:
        raise DegenerateInputError("(D beta)_S is zero; the ratio is undefined")
    return float(math.sqrt(len(S)) * np.linalg.norm(beta) / restricted)


def compatibility_lower_bound(g: Graph, subset_size: int) -> float:
    """Guaranteed floor ``1 / (2 sqrt(min(d, |S|)))`` of the compatibility factor."""
    return 1.0 / (2.0 * math.sqrt(min(g.max_degree, subset_size)))


# =============================================================================
# Edge-list files
# =============================================================================


def _strip_comment(line: str) -> tuple[str, str]:
    body, _, comment = line.partition("#")
    return body.strip(), comment.strip()


def read_edge_list(path: str | Path, p: int | None = None) -> Graph:
    """Read an ``i j`` per line edge list; ``#`` starts a comment.

    A ``# p=N`` comment fixes the vertex count (for isolated trailing
    vertices); otherwise ``p`` defaults to the largest index plus one.

    Raises:
        DataFileError: If the file is unreadable or a line is malformed.
        ValidationError: If the edges violate the graph invariants.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataFileError(f"cannot read edge list {path}: {exc}") from exc
    edges: list[Edge] = []
    declared: int | None = None
    for lineno, line in enumerate(lines, start=1):
        body, comment = _strip_comment(line)
        header = re.fullmatch(r"p\s*=\s*(\d+)", comment)
        if header:
            declared = int(header.group(1))
        if not body:
            continue
        tokens = body.split()
        if len(tokens) != 2:
            raise DataFileError(f"{path}:{lineno}: expected 'i j', got {body!r}")
        try:
            edges.append((int(tokens[0]), int(tokens[1])))
        except ValueError as exc:
            raise DataFileError(f"{path}:{lineno}: non-integer vertex in {body!r}") from exc
    if p is None:
        p = declared
    if p is None:
        if not edges:
            raise DataFileError(f"{path}: no edges and no '# p=N' header")
        p = max(max(e) for e in edges) + 1
    return Graph(p, tuple(edges), GraphKind.CUSTOM, ())


def write_edge_list(g: Graph, path: str | Path) -> Path:
    path = Path(path)
    lines = [f"# p={g.p}"] + [f"{i} {j}" for i, j in g.edges]
    path.write_text("\n".join(lines) + "\n")
    return path


def edge_subsets(m: int, sizes: Iterable[int], rng: np.random.Generator) -> list[list[int]]:
    """Random edge subsets of the requested sizes (for compatibility checks)."""
    return [sorted(rng.choice(m, size=s, replace=False).tolist()) for s in sizes]
