"""Tests for graph construction and graph linear algebra."""

import math

import numpy as np
import pytest

from genreg import (
    DataFileError,
    DegenerateInputError,
    Graph,
    GraphKind,
    ValidationError,
    barbell_graph,
    build_graph,
    chain_graph,
    compatibility_ratio,
    graph_spectra,
    grid_graph,
    incidence_matrix,
    laplacian,
    parse_graph_spec,
    read_edge_list,
    star_graph,
    write_edge_list,
)
from genreg.graph import compatibility_lower_bound, connected_components, edge_subsets
from genreg.numerics import make_rng


class TestConstructors:
    """Test the canonical graph families."""

    def test_chain_edges(self) -> None:
        """A chain joins consecutive vertices."""
        g = build_graph("chain", 3)
        assert g.edges == ((0, 1), (1, 2))
        assert g.kind is GraphKind.CHAIN

    def test_grid_counts(self) -> None:
        """A square grid has m = 2p - 2 sqrt(p) edges."""
        g = build_graph("grid", 3, 3)
        assert g.p == 9
        assert g.m == 12 == 2 * 9 - 2 * 3

    def test_grid_edge_order(self) -> None:
        """Grid edges are enumerated axis by axis."""
        g = grid_graph(2, 2)
        assert g.edges == ((0, 2), (1, 3), (0, 1), (2, 3))

    def test_barbell_counts(self) -> None:
        """Two triangles joined by a four-edge path."""
        g = barbell_graph(3, 4)
        assert g.p == 9
        assert g.m == 3 + 3 + 4
        assert (2, 3) in g.edges
        assert (5, 6) in g.edges

    def test_star_center(self) -> None:
        """Every star edge touches vertex 0."""
        g = star_graph(5)
        assert all(i == 0 for i, _ in g.edges)
        assert g.max_degree == 4

    def test_complete_edges(self) -> None:
        """The complete graph has p(p-1)/2 edges."""
        assert build_graph("complete", 5).m == 10

    def test_unknown_kind(self) -> None:
        """Unknown families raise ValidationError."""
        with pytest.raises(ValidationError):
            build_graph("hypercube", 3)

    def test_too_small(self) -> None:
        """Families reject sizes below their minimum."""
        with pytest.raises(ValidationError):
            star_graph(1)
        with pytest.raises(ValidationError):
            barbell_graph(1, 2)


class TestGraphInvariants:
    """Test the edge-list validation."""

    def test_self_loop(self) -> None:
        with pytest.raises(ValidationError, match="self-loop"):
            Graph(3, ((1, 1),))

    def test_repeated_edge(self) -> None:
        """(0, 1) and (1, 0) are the same undirected edge."""
        with pytest.raises(ValidationError, match="repeated"):
            Graph(3, ((0, 1), (1, 0)))

    def test_out_of_range(self) -> None:
        with pytest.raises(ValidationError):
            Graph(2, ((0, 2),))

    def test_isolated_vertices_allowed(self) -> None:
        """Graphs may have no edges at all."""
        g = Graph(2, ())
        assert g.m == 0
        assert connected_components(g) == 2


class TestIncidenceAndLaplacian:
    """Test the derived matrices."""

    def test_chain_incidence(self) -> None:
        assert incidence_matrix(chain_graph(3)).tolist() == [[1, -1, 0], [0, 1, -1]]

    def test_star_incidence(self) -> None:
        assert incidence_matrix(star_graph(3)).tolist() == [[1, -1, 0], [1, 0, -1]]

    def test_single_edge(self) -> None:
        assert incidence_matrix(Graph(2, ((0, 1),))).tolist() == [[1, -1]]

    def test_chain_three_laplacian(self) -> None:
        assert laplacian(chain_graph(3)).tolist() == [[1, -1, 0], [-1, 2, -1], [0, -1, 1]]

    def test_laplacian_is_gram(self) -> None:
        """L equals D'D on every family."""
        for g in (chain_graph(6), grid_graph(3, 4), barbell_graph(3, 2), star_graph(5)):
            D = incidence_matrix(g)
            np.testing.assert_array_equal(laplacian(g), D.T @ D)

    def test_components(self) -> None:
        assert connected_components(barbell_graph(4, 3)) == 1
        assert connected_components(Graph(4, ((0, 1),))) == 3


class TestSpectra:
    """Test pseudoinverse-derived graph quantities."""

    @pytest.mark.parametrize("p", [3, 4, 10, 50])
    def test_star_rho(self, p) -> None:
        """Star columns of D^+ have norm sqrt(1 - 1/p)."""
        assert abs(graph_spectra(star_graph(p)).rho - math.sqrt(1 - 1 / p)) <= 1e-10

    def test_complete_rho_scales_inverse_p(self) -> None:
        """p * rho(K_p) stays in a constant band (it is sqrt(2) exactly)."""
        scaled = [p * graph_spectra(build_graph("complete", p)).rho for p in range(5, 41, 5)]
        median = float(np.median(scaled))
        assert all(0.5 * median <= v <= 2.0 * median for v in scaled)
        np.testing.assert_allclose(scaled, math.sqrt(2), atol=1e-9)

    def test_chain_rho_scales_sqrt_p(self) -> None:
        """rho(chain_p) / sqrt(p) stays in a constant band."""
        scaled = [
            graph_spectra(chain_graph(p)).rho / math.sqrt(p) for p in (10, 20, 50, 100, 200, 500)
        ]
        median = float(np.median(scaled))
        assert all(0.5 * median <= v <= 2.0 * median for v in scaled)

    def test_chain_rho_closed_form(self) -> None:
        """Edge j of a chain has squared D^+ column norm (j + 1)(p - j - 1) / p."""
        p = 11
        expected = max((j + 1) * (p - j - 1) / p for j in range(p - 1))
        assert graph_spectra(chain_graph(p)).rho == pytest.approx(math.sqrt(expected), abs=1e-10)

    def test_grid_rho_scales_sqrt_log_p(self) -> None:
        """On square grids rho / sqrt(log p) stays in a constant band."""
        scaled = [
            graph_spectra(grid_graph(k, k)).rho / math.sqrt(math.log(k * k)) for k in (4, 8, 16)
        ]
        median = float(np.median(scaled))
        assert all(0.5 * median <= v <= 2.0 * median for v in scaled)

    @pytest.mark.parametrize(
        "g",
        [
            chain_graph(7),
            star_graph(6),
            grid_graph(3, 4),
            barbell_graph(3, 2),
            build_graph("complete", 5),
            Graph(6, ((0, 1), (2, 3), (3, 4))),
        ],
    )
    def test_projection_identities(self, g) -> None:
        """The kernel projector is idempotent and complements D^+ D."""
        spectra = graph_spectra(g)
        proj = spectra.kernel_projection
        D = incidence_matrix(g)
        np.testing.assert_allclose(proj @ proj, proj, atol=1e-10)
        np.testing.assert_allclose(proj + spectra.pinv_incidence @ D, np.eye(g.p), atol=1e-10)
        np.testing.assert_allclose(proj, proj.T, atol=1e-12)

    def test_chain_two(self) -> None:
        spectra = graph_spectra(chain_graph(2))
        np.testing.assert_allclose(spectra.pinv_incidence, [[0.5], [-0.5]], atol=1e-12)
        assert spectra.rho == pytest.approx(math.sqrt(0.5))
        assert spectra.n_components == 1

    def test_no_edges(self) -> None:
        spectra = graph_spectra(Graph(2, ()))
        assert spectra.n_components == 2
        np.testing.assert_array_equal(spectra.kernel_projection, np.eye(2))

    def test_connected_kernel_is_constants(self) -> None:
        """A connected graph's kernel projector averages the vertices."""
        spectra = graph_spectra(grid_graph(3, 3))
        np.testing.assert_allclose(spectra.kernel_projection, np.full((9, 9), 1 / 9), atol=1e-10)

    def test_component_count_matches_traversal(self) -> None:
        g = Graph(6, ((0, 1), (2, 3), (3, 4)))
        assert graph_spectra(g).n_components == connected_components(g) == 3

    def test_bad_tolerance(self) -> None:
        with pytest.raises(ValidationError):
            graph_spectra(chain_graph(3), svd_tol=1.5)


class TestCompatibility:
    """Test the compatibility-factor surrogate."""

    def test_single_edge(self) -> None:
        assert compatibility_ratio(chain_graph(2), [0], [1.0, 0.0]) == pytest.approx(1.0)

    def test_two_edges(self) -> None:
        ratio = compatibility_ratio(chain_graph(3), [0, 1], [1.0, 0.0, -1.0])
        assert ratio == pytest.approx(1.0)

    @pytest.mark.parametrize("g", [grid_graph(5, 5), chain_graph(20)])
    def test_lower_bound_holds(self, g) -> None:
        """Random ratios never fall under 1 / (2 sqrt(min(d, |S|)))."""
        rng = make_rng(7)
        for _ in range(500):
            beta = rng.standard_normal(g.p)
            (S,) = edge_subsets(g.m, [int(rng.integers(1, g.m + 1))], rng)
            ratio = compatibility_ratio(g, S, beta)
            assert ratio >= compatibility_lower_bound(g, len(S)) - 1e-12

    def test_empty_subset(self) -> None:
        with pytest.raises(ValidationError):
            compatibility_ratio(chain_graph(3), [], [1.0, 2.0, 3.0])

    def test_vanishing_differences(self) -> None:
        with pytest.raises(DegenerateInputError):
            compatibility_ratio(chain_graph(3), [0], [1.0, 1.0, 5.0])


class TestGraphSpecs:
    """Test inline presets and edge-list files."""

    def test_inline_presets(self) -> None:
        assert parse_graph_spec("chain:5").p == 5
        assert parse_graph_spec("grid:3x4").m == 17
        assert parse_graph_spec("barbell:3x4").p == 9

    def test_bare_preset_uses_p(self) -> None:
        assert parse_graph_spec("chain", p=4).m == 3

    def test_bare_preset_needs_p(self) -> None:
        with pytest.raises(ValidationError):
            parse_graph_spec("star")

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(ValidationError):
            parse_graph_spec(str(tmp_path / "nope.txt"))

    def test_edge_list_file(self, tmp_path) -> None:
        """A '# p=N' header keeps trailing isolated vertices."""
        path = tmp_path / "edges.txt"
        path.write_text("# p=5\n0 1\n1 2  # middle\n\n2 3\n")
        g = read_edge_list(path)
        assert g.p == 5
        assert g.edges == ((0, 1), (1, 2), (2, 3))
        assert parse_graph_spec(str(path)).p == 5

    def test_written_list_reads_back(self, tmp_path) -> None:
        g = barbell_graph(3, 2)
        h = read_edge_list(write_edge_list(g, tmp_path / "barbell.txt"))
        assert (h.p, h.edges) == (g.p, g.edges)

    def test_malformed_line(self, tmp_path) -> None:
        path = tmp_path / "bad.txt"
        path.write_text("0 1\n1 2 3\n")
        with pytest.raises(DataFileError, match=":2:"):
            read_edge_list(path)
