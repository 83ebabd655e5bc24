import numpy as np
import pytest

from oracles import laplacian, random_digraph, reach, svd_nullspace, svd_rank
from weaksync.errors import StructuralError
from weaksync.graph import CanonicalLaplacian, DirectedWeightedGraph, build_laplacian, canonical_laplacian, decompose_bicomponents
from weaksync.kernel import beta_coefficients, kernel_basis, kernel_structure, mixing_matrix, scaled_reduction


def edges(n, *triples):
    return DirectedWeightedGraph.from_edges(n, [(a - 1, b - 1, w) for a, b, w in triples])


HUB = edges(3, (1, 3, 1.0), (2, 3, 3.0))
CHAIN2 = edges(2, (1, 2, 1.0))


def analyse(g):
    d = decompose_bicomponents(g)
    L = build_laplacian(g)
    return d, L, kernel_structure(L, d)


def beta_from_nullspace(w, d):
    """Convex weights read off a generic SVD basis of ker L.

    Rescale the basis so it equals the identity on one representative node
    per basic bicomponent; the non-basic rows are then the weights.
    """
    N = svd_nullspace(laplacian(w))
    reps = [c[0] for c in d.basic_components]
    X = N @ np.linalg.inv(N[reps])
    return np.array([X[v] for v in d.nonbasic_nodes]).reshape(d.m0, d.k)


def random_graphs(count, seed, n_max=12):
    rng = np.random.default_rng(seed)
    return [DirectedWeightedGraph(random_digraph(rng, n_max=n_max)) for _ in range(count)]


class TestBeta:
    def test_hub(self):
        d, L, ks = analyse(HUB)
        np.testing.assert_allclose(ks.beta, [[0.25, 0.75]], atol=1e-15)
        np.testing.assert_allclose(beta_from_nullspace(HUB.weights, d), [[0.25, 0.75]], atol=1e-12)

    def test_chain(self):
        _, _, ks = analyse(CHAIN2)
        assert np.array_equal(ks.beta, [[1.0]])

    def test_symmetric_sink(self):
        _, _, ks = analyse(edges(3, (1, 3, 2.0), (2, 3, 2.0)))
        assert np.array_equal(ks.beta, [[0.5, 0.5]])

    def test_empty_when_no_nonbasic(self):
        d, L, ks = analyse(DirectedWeightedGraph(np.zeros((3, 3))))
        assert ks.beta.shape == (0, 3)
        assert np.array_equal(ks.kernel_basis, np.eye(3))
        assert mixing_matrix(ks.beta, d.block_sizes).shape == (0, 3)

    def test_matches_nullspace_oracle(self):
        for g in random_graphs(100, 3):
            d, L, ks = analyse(g)
            if d.m0:
                np.testing.assert_allclose(ks.beta, beta_from_nullspace(g.weights, d), atol=1e-8)

    def test_positive_iff_reachable(self):
        for g in random_graphs(200, 5):
            d, _, ks = analyse(g)
            r = reach(g.weights)
            for row, node in enumerate(d.nonbasic_nodes):
                for i, comp in enumerate(d.basic_components):
                    assert (ks.beta[row, i] > 1e-12) == bool(r[list(comp), node].any())

    def test_singular_L0_raises(self):
        # a hand-made canonical view whose L0 is singular
        fake = CanonicalLaplacian(
            order=np.array([0, 1, 2]),
            matrix=np.array([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]),
            block_sizes=(2, 1),
        )
        with pytest.raises(StructuralError):
            beta_coefficients(fake)

    def test_negative_beta_raises(self):
        fake = CanonicalLaplacian(
            order=np.array([0, 1]),
            matrix=np.array([[1.0, 1.0], [0.0, 0.0]]),
            block_sizes=(1, 1),
        )
        with pytest.raises(StructuralError, match="negative"):
            beta_coefficients(fake)


class TestKernelBasis:
    def test_chain(self):
        _, _, ks = analyse(CHAIN2)
        assert np.array_equal(ks.kernel_basis, [[1.0], [1.0]])

    def test_hub(self):
        d, L, ks = analyse(HUB)
        np.testing.assert_allclose(ks.kernel_basis, [[0.25, 0.75], [1, 0], [0, 1]])
        P = canonical_laplacian(L, d).matrix
        np.testing.assert_allclose(P @ ks.kernel_basis, 0, atol=1e-15)

    def test_isolated(self):
        _, _, ks = analyse(DirectedWeightedGraph(np.zeros((2, 2))))
        assert np.array_equal(ks.kernel_basis, np.eye(2))

    def test_direct_construction(self):
        kb = kernel_basis(np.array([[0.5, 0.5]]), (1, 2, 1))
        assert np.array_equal(kb, [[0.5, 0.5], [1, 0], [1, 0], [0, 1]])

    def test_span_matches_svd_nullspace(self):
        for g in random_graphs(100, 8):
            d, L, ks = analyse(g)
            kb = ks.kernel_basis_original()
            assert svd_rank(kb) == d.k
            np.testing.assert_allclose(L @ kb, 0, atol=1e-9)
            N = svd_nullspace(L)
            assert N.shape[1] == d.k
            proj = N @ (N.T @ kb)
            assert np.max(np.abs(proj - kb)) < 1e-8
            np.testing.assert_allclose(kb.sum(axis=1), 1.0, atol=1e-12)


class TestMixing:
    def test_hub(self):
        d, _, ks = analyse(HUB)
        np.testing.assert_allclose(mixing_matrix(ks.beta, d.block_sizes), [[0.25, 0.75]])

    def test_chain(self):
        d, _, ks = analyse(CHAIN2)
        assert np.array_equal(mixing_matrix(ks.beta, d.block_sizes), [[1.0]])

    def test_two_pairs(self):
        B = mixing_matrix(np.array([[0.5, 0.5]]), (1, 2, 2))
        assert np.array_equal(B, [[0.25, 0.25, 0.25, 0.25]])
        kb = kernel_basis(np.array([[0.5, 0.5]]), (1, 2, 2))
        assert np.allclose(-kb[:1] + B @ kb[1:], 0)

    def test_kernel_inclusion(self):
        for g in random_graphs(100, 9):
            d, _, ks = analyse(g)
            B = mixing_matrix(ks.beta, d.block_sizes)
            v0, vb = ks.kernel_basis[: d.m0], ks.kernel_basis[d.m0 :]
            np.testing.assert_allclose(-v0 + B @ vb, 0, atol=1e-9)


class TestScaledReduction:
    def test_hub(self):
        d, L, ks = analyse(HUB)
        red = scaled_reduction(L, ks, 0)
        assert red.support == (2, 0)
        np.testing.assert_allclose(red.gamma, np.diag([0.25, 1.0]))
        assert np.array_equal(red.submatrix, [[4, -1], [0, 0]])
        np.testing.assert_allclose(red.reduced, [[4, -4], [0, 0]])
        assert red.rank == 1

    def test_chain(self):
        d, L, ks = analyse(CHAIN2)
        red = scaled_reduction(L, ks, 0)
        assert red.support == (1, 0)
        assert np.array_equal(red.gamma, np.eye(2))
        assert np.array_equal(red.reduced, [[1, -1], [0, 0]])

    def test_all_basic(self):
        g = edges(4, (1, 2, 1.0), (2, 1, 2.0), (3, 4, 1.5), (4, 3, 0.5))
        d, L, ks = analyse(g)
        for i, comp in enumerate(d.basic_components):
            red = scaled_reduction(L, ks, i)
            assert red.support == comp
            assert np.array_equal(red.gamma, np.eye(len(comp)))
            assert np.array_equal(red.reduced, L[np.ix_(comp, comp)])

    def test_index_range(self):
        d, L, ks = analyse(HUB)
        with pytest.raises(IndexError):
            scaled_reduction(L, ks, 2)

    def test_random_properties(self):
        for g in random_graphs(100, 12):
            d, L, ks = analyse(g)
            for i in range(d.k):
                red = scaled_reduction(L, ks, i)
                assert np.all(np.diag(red.gamma) > 0)
                np.testing.assert_allclose(red.reduced.sum(axis=1), 0, atol=1e-9)
                assert svd_rank(red.reduced) == red.size - 1
