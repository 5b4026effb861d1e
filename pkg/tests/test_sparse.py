"""CSR container, sparse products and graph operators against dense oracles."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from graphfilter.sparse import (Graph, GraphError, IsolatedVertexError, LaplacianKind,
                                SparseMatrix, build_laplacian, propagation_matrix,
                                random_walk_adjacency, renormalized_adjacency, spmm, spmm_add,
                                symmetric_normalized_adjacency)

from conftest import complete, path, random_graph


def dense_laplacians(w):
    d = w.sum(axis=1)
    lap = np.diag(d) - w
    dis = np.where(d > 0, 1 / np.sqrt(np.where(d > 0, d, 1)), 0)
    sym = np.eye(len(d)) - dis[:, None] * w * dis[None, :]
    dt = d + 1
    ren = np.eye(len(d)) - (w + np.eye(len(d))) / np.sqrt(np.outer(dt, dt))
    return lap, sym, ren


class TestSparseMatrix:
    def test_from_coo_sums_duplicates(self):
        a = SparseMatrix.from_coo(2, 3, [0, 0, 1], [2, 2, 0], [1.0, 2.5, -1.0])
        np.testing.assert_array_equal(a.to_dense(), [[0, 0, 3.5], [-1, 0, 0]])
        assert a.nnz == 2

    def test_drop_zeros(self):
        a = SparseMatrix.from_coo(1, 2, [0, 0], [1, 1], [1.0, -1.0], drop_zeros=True)
        assert a.nnz == 0

    @pytest.mark.parametrize("kwargs", [
        dict(row_offsets=[0, 1], col_indices=[0, 0], values=[1.0, 1.0]),
        dict(row_offsets=[0, 2], col_indices=[1, 0], values=[1.0, 1.0]),
        dict(row_offsets=[0, 1], col_indices=[5], values=[1.0]),
        dict(row_offsets=[0, 1], col_indices=[0], values=[np.nan]),
    ])
    def test_invalid_structure(self, kwargs):
        with pytest.raises(ValueError):
            SparseMatrix(1, 2, **kwargs)

    def test_arrays_read_only(self):
        a = SparseMatrix.identity(3)
        with pytest.raises(ValueError):
            a.values[0] = 2.0

    def test_transpose_with_perm(self, rng):
        d = rng.normal(size=(5, 7)) * (rng.random((5, 7)) < 0.4)
        a = SparseMatrix.from_dense(d)
        t, perm = a.transpose_with_perm()
        np.testing.assert_array_equal(t.to_dense(), d.T)
        np.testing.assert_array_equal(t.values, a.values[perm])

    def test_scale_add_diagonal(self, rng):
        d = rng.normal(size=(4, 4))
        a = SparseMatrix.from_dense(d)
        left, right = rng.normal(size=4), rng.normal(size=4)
        np.testing.assert_allclose(a.scale(left, right).to_dense(),
                                   left[:, None] * d * right[None, :])
        np.testing.assert_allclose(a.add(SparseMatrix.identity(4), 2.0, -1.0).to_dense(),
                                   2 * d - np.eye(4))
        np.testing.assert_allclose(a.diagonal(), np.diag(d))
        np.testing.assert_allclose(a.row_sums(), d.sum(axis=1))


class TestSpmm:
    def test_identity(self, rng):
        x = rng.normal(size=(4, 3))
        np.testing.assert_array_equal(spmm(SparseMatrix.identity(4), x), x)

    def test_empty_rows(self):
        a = SparseMatrix.from_coo(3, 3, [1], [2], [2.0])
        np.testing.assert_array_equal(spmm(a, np.ones((3, 2))), [[0, 0], [2, 2], [0, 0]])

    def test_vector_input(self):
        a = SparseMatrix.from_dense([[1.0, 2.0], [0.0, 3.0]])
        out = spmm(a, np.array([1.0, 1.0]))
        assert out.shape == (2,)
        np.testing.assert_array_equal(out, [3.0, 3.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="2x2.*3x1"):
            spmm(SparseMatrix.identity(2), np.ones((3, 1)))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 4), st.data())
    def test_matches_dense(self, n, m, p, data):
        mask = data.draw(arrays(bool, (n, m)))
        vals = data.draw(arrays(np.float64, (n, m), elements=st.floats(-5, 5)))
        x = data.draw(arrays(np.float64, (m, p), elements=st.floats(-5, 5)))
        d = np.where(mask, vals, 0.0)
        a = SparseMatrix.from_dense(d)
        np.testing.assert_allclose(spmm(a, x), d @ x, atol=1e-12)
        b = data.draw(arrays(np.float64, (n, p), elements=st.floats(-5, 5)))
        np.testing.assert_allclose(spmm_add(a, x, b, 0.7), b + 0.7 * (d @ x), atol=1e-12)


class TestGraph:
    def test_from_edges_symmetrizes_and_sums(self):
        g = Graph.from_edges(3, [0, 0, 1], [1, 1, 2], [1.0, 2.0, 1.0])
        w = g.adjacency.to_dense()
        np.testing.assert_array_equal(w, w.T)
        assert w[0, 1] == 3.0
        np.testing.assert_array_equal(g.degrees, [3.0, 4.0, 1.0])
        assert g.n_edges == 2

    @pytest.mark.parametrize("src,dst,w", [([0], [0], None), ([0], [1], [-1.0]), ([0], [3], None)])
    def test_rejects_bad_edges(self, src, dst, w):
        with pytest.raises(GraphError):
            Graph.from_edges(3, src, dst, w)

    def test_isolated(self):
        g = Graph.from_edges(4, [0], [1])
        np.testing.assert_array_equal(g.isolated(), [2, 3])


class TestLaplacians:
    def test_k2_unnormalized(self):
        lap = build_laplacian(complete(2), LaplacianKind.UNNORMALIZED).to_dense()
        np.testing.assert_array_equal(lap, [[1, -1], [-1, 1]])

    def test_k2_renormalized(self):
        lap = build_laplacian(complete(2), LaplacianKind.RENORMALIZED_SYMMETRIC).to_dense()
        np.testing.assert_allclose(lap, [[0.5, -0.5], [-0.5, 0.5]])

    def test_p3_symmetric_entry(self):
        # degrees 1, 2, 1 with self-loops become 2, 3, 2
        w = renormalized_adjacency(path(3)).to_dense()
        assert abs(w[0, 1] - 1 / np.sqrt(6)) < 1e-15
        assert abs(w[0, 1] - 0.40825) < 1e-5
        sym = build_laplacian(path(3), LaplacianKind.SYMMETRIC).to_dense()
        assert abs(sym[0, 1] + 1 / np.sqrt(2)) < 1e-15

    def test_parse_aliases(self):
        assert LaplacianKind.parse("rw") is LaplacianKind.RANDOM_WALK
        assert LaplacianKind.parse("renormalized") is LaplacianKind.RENORMALIZED_SYMMETRIC
        with pytest.raises(ValueError):
            LaplacianKind.parse("nonsense")

    def test_random_graphs_match_dense(self, rng):
        for _ in range(20):
            g = random_graph(rng)
            w = g.adjacency.to_dense()
            lap, sym, ren = dense_laplacians(w)
            d = np.where(g.degrees > 0, g.degrees, 1.0)
            np.testing.assert_allclose(build_laplacian(g, "unnormalized").to_dense(), lap,
                                       atol=1e-14)
            if not g.isolated().size:
                np.testing.assert_allclose(build_laplacian(g, "symmetric").to_dense(), sym,
                                           atol=1e-14)
                np.testing.assert_allclose(build_laplacian(g, "random-walk").to_dense(),
                                           lap / d[:, None], atol=1e-14)
            np.testing.assert_allclose(build_laplacian(g, "renormalized").to_dense(), ren,
                                       atol=1e-14)

    def test_invariants(self, rng):
        for _ in range(20):
            g = random_graph(rng)
            ones = np.ones(g.n)
            np.testing.assert_allclose(spmm(build_laplacian(g, "unnormalized"), ones), 0,
                                       atol=1e-12)
            for kind in ("symmetric", "renormalized"):
                lap = build_laplacian(g, kind)
                assert lap.is_symmetric(1e-14)
                assert np.linalg.eigvalsh(lap.to_dense()).min() > -1e-12
            sqrt_d = np.sqrt(g.degrees + 1)
            np.testing.assert_allclose(spmm(build_laplacian(g, "renormalized"), sqrt_d), 0,
                                       atol=1e-12)
            rw = random_walk_adjacency(g).to_dense()
            keep = g.degrees > 0
            np.testing.assert_allclose(rw[keep].sum(axis=1), 1.0)

    def test_isolated_vertex_handling(self):
        g = Graph.from_edges(3, [0], [1])
        w = symmetric_normalized_adjacency(g).to_dense()
        assert w[2, 2] == 1.0
        assert build_laplacian(g, "symmetric").to_dense()[2, 2] == 0.0
        with pytest.raises(IsolatedVertexError):
            build_laplacian(g, "symmetric", strict=True)

    def test_propagation_matrix(self):
        g = complete(3)
        np.testing.assert_allclose(propagation_matrix(g, "symmetric").to_dense(),
                                   (np.ones((3, 3)) - np.eye(3)) / 2)
        with pytest.raises(ValueError):
            propagation_matrix(g, "unnormalized")
