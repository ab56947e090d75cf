import dataclasses
import math

import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pairwire.onedim import essential_spectrum_bottom
from pairwire.strip import (
    MeshBudgetError,
    StripGeometry,
    Tag,
    assemble,
    build_mesh,
    expected_node_count,
    read_mesh,
    trace_ratio,
    write_mesh,
)


def brute_force_nodes(n_cells, m):
    return {(i, j) for i in range(n_cells + 1) for j in range(i + 1) if i - j <= m}


def unconstrained(forms):
    return dataclasses.replace(forms, dirichlet_mask=np.zeros_like(forms.dirichlet_mask), _cache={})


def dense_spectrum(forms, k):
    A, M = forms.pencil()
    return la.eigh(A.toarray(), M.toarray(), eigvals_only=True)[:k]


class TestMesh:
    def test_small_example(self):
        mesh = build_mesh(StripGeometry(1.0, 2.0), 2)
        assert mesh.n_nodes == 12
        assert len(mesh.diagonal_nodes()) == 5
        assert set(map(tuple, mesh.ij.tolist())) == brute_force_nodes(4, 2)
        np.testing.assert_array_equal(np.sort(mesh.nodes_with_tag(Tag.ROBIN_DIAG)), np.sort(mesh.diagonal_nodes()))

    def test_medium_example(self):
        mesh = build_mesh(StripGeometry(1.0, 30.0), 20)
        assert mesh.h == pytest.approx(0.05)
        assert mesh.L == pytest.approx(30.0)
        assert mesh.n_nodes == expected_node_count(600, 20) == len(brute_force_nodes(600, 20))
        for tag in Tag:
            assert len(mesh.nodes_with_tag(tag)) > 0

    def test_L_rounded_up(self):
        mesh = build_mesh(StripGeometry(1.0, 2.3), 4)
        assert mesh.L == pytest.approx(2.5)

    @settings(max_examples=25, deadline=None)
    @given(m=st.integers(2, 8), extra=st.integers(1, 30))
    def test_invariants(self, m, extra):
        n_cells = m + extra
        mesh = build_mesh(StripGeometry(1.0, n_cells / m), m)
        assert mesh.n_nodes == len(brute_force_nodes(n_cells, m)) == expected_node_count(n_cells, m)
        # inside the closed reduced strip
        x, y = mesh.nodes.T
        assert np.all((y >= 0) & (y <= x + 1e-12) & (x <= mesh.L + 1e-12) & (x - y <= 1.0 + 1e-12))
        # counter-clockwise, nondegenerate, total area exact
        p = mesh.nodes[mesh.triangles]
        cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        assert np.all(cross > 0)
        assert 0.5 * cross.sum() == pytest.approx(StripGeometry(1.0, mesh.L).area, rel=1e-12)
        # tagged edges lie exactly on their boundary segment
        a, b = mesh.ij[mesh.edges[:, 0]], mesh.ij[mesh.edges[:, 1]]
        on = {
            Tag.DIRICHLET_PAIR: lambda q: q[:, 0] - q[:, 1] == m,
            Tag.DIRICHLET_BOX: lambda q: q[:, 0] == n_cells,
            Tag.NEUMANN_AXIS: lambda q: (q[:, 1] == 0) & (q[:, 0] <= m),
            Tag.ROBIN_DIAG: lambda q: q[:, 0] == q[:, 1],
        }
        for tag, pred in on.items():
            sel = mesh.edge_tags == tag
            assert np.all(pred(a[sel]) & pred(b[sel]))
        # every boundary edge has exactly one tag, and the boundary length adds up
        seg = np.linalg.norm(mesh.nodes[mesh.edges[:, 0]] - mesh.nodes[mesh.edges[:, 1]], axis=1)
        L = mesh.L
        expected = math.sqrt(2) * L + math.sqrt(2) * (L - 1.0) + 1.0 + 1.0
        assert seg.sum() == pytest.approx(expected, rel=1e-12)

    def test_rejects_small_m(self):
        with pytest.raises(ValueError):
            build_mesh(StripGeometry(1.0, 3.0), 1)

    def test_rejects_L_not_above_d(self):
        with pytest.raises(ValueError):
            StripGeometry(1.0, 1.0)

    def test_node_budget(self):
        with pytest.raises(MeshBudgetError, match="budget 1000"):
            build_mesh(StripGeometry(1.0, 100.0), 10, node_budget=1000)

    def test_dump_roundtrip(self, tmp_path):
        mesh = build_mesh(StripGeometry(1.0, 3.0), 4)
        path = tmp_path / "strip.txt"
        write_mesh(mesh, path)
        assert path.read_text().startswith("# pairwire strip mesh v1")
        data = read_mesh(path)
        np.testing.assert_array_equal(data["nodes"], mesh.nodes)
        np.testing.assert_array_equal(data["triangles"], mesh.triangles)
        np.testing.assert_array_equal(data["edges"], mesh.edges)
        np.testing.assert_array_equal(data["edge_tags"], mesh.edge_tags)


@pytest.fixture(scope="module")
def forms():
    return assemble(build_mesh(StripGeometry(1.0, 2.0), 2), 1.0)


class TestAssembly:
    def test_constants_in_stiffness_kernel(self, forms):
        one = np.ones(forms.mesh.n_nodes)
        assert np.abs(forms.K @ one).max() < 1e-13

    def test_mass_total_is_area(self, forms):
        # area of {0<=y<=x<=L, x-y<=d} = d^2/2 + d (L - d) = d L - d^2/2
        one = np.ones(forms.mesh.n_nodes)
        assert one @ forms.M @ one == pytest.approx(1.5, rel=1e-14)

    def test_robin_total_is_diagonal_arclength(self, forms):
        one = np.ones(forms.mesh.n_nodes)
        assert one @ forms.R @ one == pytest.approx(2 * math.sqrt(2), rel=1e-14)

    def test_symmetry_is_exact(self):
        forms = assemble(build_mesh(StripGeometry(1.0, 7.0), 6), 2.5)
        for mat in (forms.K, forms.M, forms.R):
            assert (mat != mat.T).nnz == 0

    def test_semidefinite(self, forms):
        for mat in (forms.K, forms.R):
            assert la.eigvalsh(mat.toarray()).min() > -1e-12
        A, M = forms.pencil()
        assert la.eigvalsh(M.toarray()).min() > 0

    def test_robin_supported_on_diagonal(self):
        forms = assemble(build_mesh(StripGeometry(1.0, 4.0), 4), 1.0)
        off = np.setdiff1d(np.arange(forms.mesh.n_nodes), forms.mesh.diagonal_nodes())
        R = forms.R.tocsr()
        assert R[off].nnz == 0 and R[:, off].nnz == 0

    def test_dirichlet_mask(self):
        mesh = build_mesh(StripGeometry(1.0, 3.0), 4)
        ij = mesh.ij
        forms = assemble(mesh, 0.5)
        expected = (ij[:, 0] - ij[:, 1] == 4) | (ij[:, 0] == mesh.n_cells)
        np.testing.assert_array_equal(forms.dirichlet_mask, expected)
        # origin is unconstrained; the diagonal/box corner is Dirichlet
        origin = np.flatnonzero((ij == 0).all(axis=1))[0]
        corner = np.flatnonzero((ij[:, 0] == mesh.n_cells) & (ij[:, 1] == mesh.n_cells))[0]
        assert not forms.dirichlet_mask[origin] and forms.dirichlet_mask[corner]
        inf_forms = assemble(mesh, math.inf)
        assert np.all(inf_forms.dirichlet_mask[mesh.diagonal_nodes()])
        assert inf_forms.robin_coefficient == 0.0

    def test_degenerate_triangle(self):
        mesh = build_mesh(StripGeometry(1.0, 2.0), 2)
        tri = mesh.triangles.copy()
        tri[3] = [tri[3][0], tri[3][0], tri[3][2]]
        with pytest.raises(ArithmeticError, match="index 3"):
            assemble(dataclasses.replace(mesh, triangles=tri), 0.0)

    def test_negative_alpha(self):
        with pytest.raises(ValueError):
            assemble(build_mesh(StripGeometry(1.0, 2.0), 2), -1.0)

    def test_form_matches_quadrature_on_linear_function(self):
        # u = x + 2y is reproduced exactly by P1: energy = |grad u|^2 * area, trace = int_0^L (3x)^2 dx
        forms = assemble(build_mesh(StripGeometry(1.0, 3.0), 4), 0.0)
        x, y = forms.mesh.nodes.T
        u = x + 2 * y
        assert u @ forms.K @ u == pytest.approx(5.0 * (3.0 - 0.5), rel=1e-12)
        L = forms.mesh.L
        assert u @ forms.R @ u / math.sqrt(2) == pytest.approx(9 * L**3 / 3, rel=1e-12)


class TestTraceRatio:
    def test_zero_on_vectors_vanishing_at_diagonal(self):
        forms = assemble(build_mesh(StripGeometry(1.0, 3.0), 4), 1.0)
        u = np.random.default_rng(1).standard_normal(forms.mesh.n_nodes)
        u[forms.mesh.diagonal_nodes()] = 0.0
        assert trace_ratio(forms, u) == 0.0

    def test_constant(self):
        # (sqrt2 L / sqrt2) / (0 + area) with area = d L - d^2/2 = 1.5
        forms = unconstrained(assemble(build_mesh(StripGeometry(1.0, 2.0), 2), 0.0))
        assert trace_ratio(forms, np.ones(forms.mesh.n_nodes)) == pytest.approx(2 / 1.5, rel=1e-14)

    def test_zero_vector(self):
        forms = assemble(build_mesh(StripGeometry(1.0, 2.0), 2), 0.0)
        with pytest.raises(ValueError):
            trace_ratio(forms, np.zeros(forms.mesh.n_nodes))

    def test_free_vector_expanded(self):
        forms = assemble(build_mesh(StripGeometry(1.0, 3.0), 4), 1.0)
        u = np.random.default_rng(2).standard_normal(len(forms.free))
        assert trace_ratio(forms, u) == trace_ratio(forms, forms.expand(u))


def test_galerkin_monotone_under_refinement():
    for alpha in (0.0, 2.0, math.inf):
        coarse = dense_spectrum(assemble(build_mesh(StripGeometry(1.0, 3.0), 4), alpha), 6)
        fine = dense_spectrum(assemble(build_mesh(StripGeometry(1.0, 3.0), 8), alpha), 6)
        assert np.all(fine <= coarse + 1e-10)


def test_robin_coefficient_from_cross_section():
    # Functions constant along the diagonal direction reduce the 2D form to the
    # transverse 1D problem; its lowest eigenvalue must approach eps^D_0(alpha).
    mesh = build_mesh(StripGeometry(1.0, 100.0), 20)
    t = mesh.ij[:, 0] - mesh.ij[:, 1]
    P = sp.csr_matrix((np.ones(mesh.n_nodes), (np.arange(mesh.n_nodes), t)), shape=(mesh.n_nodes, mesh.m + 1))
    for alpha in (1.0, 10.0, 100.0):
        forms = assemble(mesh, alpha)
        A = (P.T @ forms.operator() @ P).toarray()[:-1, :-1]  # drop the Dirichlet line x - y = d
        M = (P.T @ forms.M @ P).toarray()[:-1, :-1]
        low = la.eigh(A, M, eigvals_only=True)[0]
        target = essential_spectrum_bottom(alpha, 1.0)
        assert low == pytest.approx(target, rel=5e-3)
        if alpha >= 100:
            continue  # saturated: eps^D_0 barely moves with alpha here
        # a factor 2 off in the Robin constant would be visible
        assert abs(low - essential_spectrum_bottom(2 * alpha, 1.0)) > 0.05 * target
        assert abs(low - essential_spectrum_bottom(alpha / 2, 1.0)) > 0.03 * target
