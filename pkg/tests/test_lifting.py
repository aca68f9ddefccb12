"""Block structures, plants, sparsity patterns, and the clique lifting.

The selector matrix E and everything derived from it (scale, projector,
dilation, factorize/recover) have exact algebraic identities, so most
checks here run at or near machine precision.
"""

import numpy as np
import pytest

from sparsegain.graphs import (
    CliqueCover,
    Graph,
    UncoveredNodeError,
    disk_graph,
    maximal_cliques,
)
from sparsegain.lifting import (
    BlockStructure,
    PatternViolationError,
    Plant,
    SingularFactorError,
    SparsityPattern,
    build_lifted_basis,
    dilate_plant,
    max_off_pattern,
    pattern_test,
    recover_gain,
    sparse_factorize,
)


def random_cover_instance(rng, max_nodes=8, max_block=3):
    """A random graph with its maximal-clique cover and block structure."""
    n = int(rng.integers(1, max_nodes + 1))
    edges = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)
             if rng.random() < 0.45]
    g = Graph.from_edges(n, edges)
    sizes = tuple(int(k) for k in rng.integers(1, max_block + 1, size=n))
    structure = BlockStructure(sizes, sizes)
    return g, maximal_cliques(g), structure


# -- BlockStructure ---------------------------------------------------------

def test_block_structure_offsets_and_totals():
    bs = BlockStructure((2, 1, 3), (1, 1, 2))
    assert bs.node_count == 3
    assert bs.n_total == 6 and bs.m_total == 4
    assert bs.state_offsets == (0, 2, 3, 6)
    assert bs.input_offsets == (0, 1, 2, 4)
    assert not bs.square_blocks
    with pytest.raises(ValueError):
        bs.require_square_blocks()


def test_block_structure_uniform():
    bs = BlockStructure.uniform(4, state_size=2)
    assert bs.n_sizes == (2, 2, 2, 2)
    assert bs.m_sizes == (2, 2, 2, 2)
    assert bs.square_blocks
    bs.require_square_blocks()
    assert BlockStructure.uniform(3, 1, input_size=2).m_sizes == (2, 2, 2)


def test_block_structure_validation():
    with pytest.raises(ValueError):
        BlockStructure((1, 2), (1,))
    with pytest.raises(ValueError):
        BlockStructure((), ())
    with pytest.raises(ValueError):
        BlockStructure((1, 0), (1, 1))


# -- Plant ------------------------------------------------------------------

def test_plant_basic_properties():
    p = Plant(A=np.eye(2), B=np.ones((2, 1)))
    assert p.n == 2 and p.m == 1
    assert not p.has_performance
    assert p.m_v is None and p.l is None
    with pytest.raises(ValueError):
        p.require_performance()


def test_plant_performance_group_all_or_none():
    kw = dict(A=np.eye(2), B=np.eye(2), Bv=np.eye(2), C=np.eye(2),
              D=np.zeros((2, 2)), Dw=np.zeros((2, 2)))
    p = Plant(**kw)
    assert p.has_performance and p.m_v == 2 and p.l == 2
    p.require_performance()
    partial = dict(kw)
    partial["Dw"] = None
    with pytest.raises(ValueError):
        Plant(**partial)


def test_plant_shape_validation():
    with pytest.raises(ValueError):
        Plant(A=np.ones((2, 3)), B=np.ones((2, 1)))
    with pytest.raises(ValueError):
        Plant(A=np.eye(2), B=np.ones((3, 1)))
    with pytest.raises(ValueError):
        Plant(A=np.eye(2), B=np.eye(2), Bv=np.eye(2), C=np.ones((1, 3)),
              D=np.zeros((1, 2)), Dw=np.zeros((1, 2)))
    with pytest.raises(ValueError):
        Plant(A=np.eye(2), B=np.eye(2), Bv=np.eye(2), C=np.eye(2),
              D=np.zeros((2, 2)), Dw=np.zeros((1, 2)))


def test_plant_arrays_are_read_only():
    p = Plant(A=np.eye(2), B=np.ones((2, 2)))
    with pytest.raises(ValueError):
        p.A[0, 0] = 5.0


# -- SparsityPattern --------------------------------------------------------

def test_pattern_from_graph_matches_cover():
    g = Graph.from_edges(4, [(1, 2), (2, 3), (1, 3), (3, 4)])
    bs = BlockStructure.uniform(4)
    via_graph = SparsityPattern.from_graph(g, bs)
    via_cover = SparsityPattern.from_cover(maximal_cliques(g), bs)
    assert np.array_equal(via_graph.block_mask, via_cover.block_mask)


def test_pattern_entry_level_expansion():
    g = Graph.from_edges(3, [(1, 2)])
    bs = BlockStructure((1, 2, 1), (2, 1, 1))
    pat = SparsityPattern.from_graph(g, bs)
    expected_gain = np.array([
        [1, 1, 1, 0],
        [1, 1, 1, 0],
        [1, 1, 1, 0],
        [0, 0, 0, 1],
    ], dtype=bool)
    assert np.array_equal(pat.gain_mask, expected_gain)
    assert pat.gain_mask.shape == (bs.m_total, bs.n_total)
    assert pat.state_mask.shape == (bs.n_total, bs.n_total)
    assert np.array_equal(pat.state_mask, pat.state_mask.T)


def test_pattern_validation():
    bs = BlockStructure.uniform(2)
    with pytest.raises(ValueError):
        SparsityPattern(np.array([[True, True], [False, True]]), bs)
    with pytest.raises(ValueError):
        SparsityPattern(np.array([[False, True], [True, True]]), bs)
    with pytest.raises(ValueError):
        SparsityPattern(np.ones((3, 3), dtype=bool), bs)
    g = Graph.complete(3)
    with pytest.raises(ValueError):
        SparsityPattern.from_graph(g, bs)


def test_max_off_pattern_and_pattern_test():
    bs = BlockStructure.uniform(2)
    pat = SparsityPattern.from_graph(Graph.from_edges(2, []), bs)
    K = np.array([[3.0, 1e-9], [0.0, -2.0]])
    assert max_off_pattern(K, pat) == pytest.approx(1e-9)
    assert pattern_test(K, pat)            # 1e-9 < 1e-8 * 3
    assert not pattern_test(K, pat, rel_tol=1e-12)
    full = SparsityPattern.from_graph(Graph.complete(2), bs)
    assert max_off_pattern(K, full) == 0.0


# -- lifted basis -----------------------------------------------------------

def test_basis_frozen_path_example():
    cover = CliqueCover.from_cliques([(1, 2), (2, 3)])
    basis = build_lifted_basis(BlockStructure.uniform(3), cover)
    expected_E = np.array([
        [1, 0, 0],
        [0, 1, 0],
        [0, 1, 0],
        [0, 0, 1],
    ])
    assert basis.E.dtype == np.int64
    assert np.array_equal(basis.E, expected_E)
    assert basis.counts == (1, 2, 1)
    assert np.array_equal(basis.scale, [1, 2, 1])
    assert basis.lifted_dim == 4
    assert basis.clique_row_ranges == ((0, 2), (2, 4))
    assert basis.clique_block_sizes == (2, 2)


def test_basis_rejects_bad_covers():
    bs = BlockStructure.uniform(3)
    with pytest.raises(UncoveredNodeError):
        build_lifted_basis(bs, CliqueCover.from_cliques([(1, 2)]))
    tri = Graph.from_edges(3, [(1, 2), (2, 3), (1, 3)])
    with pytest.raises(ValueError):
        build_lifted_basis(bs, CliqueCover.from_cliques([(1, 2), (2, 3)]), graph=tri)


def test_selector_matrix_properties_random():
    rng = np.random.default_rng(314)
    for trial in range(60):
        g, cover, bs = random_cover_instance(rng)
        basis = build_lifted_basis(bs, cover, graph=g)
        E = basis.E
        assert set(np.unique(E)) <= {0, 1}
        assert np.array_equal(E.sum(axis=1), np.ones(basis.lifted_dim, dtype=np.int64))
        assert np.linalg.matrix_rank(E.astype(float)) == bs.n_total
        gram = E.T @ E  # integer arithmetic end to end
        assert np.array_equal(gram, np.diag(basis.scale))
        counts = np.array(basis.counts)
        assert np.array_equal(basis.scale, np.repeat(counts, bs.n_sizes))


def test_projector_identities_random():
    rng = np.random.default_rng(2718)
    for trial in range(40):
        g, cover, bs = random_cover_instance(rng)
        basis = build_lifted_basis(bs, cover)
        N = basis.projector
        Ef = basis.E.astype(float)
        assert np.max(np.abs(N @ N - N)) <= 1e-12
        assert np.max(np.abs(N @ Ef)) <= 1e-12
        assert np.max(np.abs(N - N.T)) <= 1e-12
        M = basis.doubled_projector
        L = basis.lifted_dim
        assert M.shape == (2 * L, 2 * L)
        assert np.array_equal(M[:L, :L], N)
        assert np.array_equal(M[L:, L:], N)
        assert not M[:L, L:].any()
        assert np.max(np.abs(M @ M - M)) <= 1e-12


def test_single_clique_projector_is_zero():
    basis = build_lifted_basis(
        BlockStructure.uniform(3, 2), CliqueCover.from_cliques([(1, 2, 3)])
    )
    assert basis.lifted_dim == 6
    assert np.array_equal(basis.E, np.eye(6, dtype=np.int64))
    assert np.max(np.abs(basis.projector)) == 0.0


def test_congruence_with_selector_keeps_definiteness():
    # block-diagonal positive definite matrices stay definite and patterned
    # after being squeezed down through E
    rng = np.random.default_rng(808)
    for trial in range(30):
        g, cover, bs = random_cover_instance(rng)
        basis = build_lifted_basis(bs, cover)
        blocks = []
        for size in basis.clique_block_sizes:
            W = rng.standard_normal((size, size))
            blocks.append(W @ W.T + 0.1 * np.eye(size))
        P_til = np.zeros((basis.lifted_dim, basis.lifted_dim))
        for (lo, hi), blk in zip(basis.clique_row_ranges, blocks):
            P_til[lo:hi, lo:hi] = blk
        Ef = basis.E.astype(float)
        P = Ef.T @ P_til @ Ef
        assert np.min(np.linalg.eigvalsh(P)) > 0.0
        pat = SparsityPattern.from_cover(cover, bs)
        assert np.max(np.abs(P[~pat.state_mask])) == 0.0 if (~pat.state_mask).any() else True


# -- dilation ---------------------------------------------------------------

def test_dilation_identities():
    rng = np.random.default_rng(1234)
    for trial in range(25):
        g, cover, bs = random_cover_instance(rng, max_nodes=6)
        basis = build_lifted_basis(bs, cover)
        n, m = bs.n_total, bs.m_total
        plant = Plant(
            A=rng.standard_normal((n, n)),
            B=rng.standard_normal((n, m)),
            Bv=rng.standard_normal((n, 2)),
            C=rng.standard_normal((3, n)),
            D=rng.standard_normal((3, m)),
            Dw=rng.standard_normal((3, 2)),
        )
        til = dilate_plant(plant, basis)
        Ef = basis.E.astype(float)
        # the dilation is the exact lift: squeezing back down recovers A, B
        assert np.max(np.abs(basis.lift_down(til.A) - plant.A)) <= 1e-13
        assert np.max(np.abs(basis.lift_down(til.B) - plant.B)) <= 1e-13
        # intertwining with the selector
        assert np.max(np.abs(til.A @ Ef - Ef @ plant.A)) <= 1e-13
        assert np.max(np.abs(til.C @ Ef - plant.C)) <= 1e-13
        assert np.array_equal(til.Bv, Ef @ plant.Bv)
        assert np.array_equal(til.Dw, plant.Dw)


def test_dilation_without_performance_channel():
    basis = build_lifted_basis(
        BlockStructure.uniform(2), CliqueCover.from_cliques([(1, 2)])
    )
    til = dilate_plant(Plant(A=np.eye(2), B=np.eye(2)), basis)
    assert til.Bv is None and til.C is None and til.D is None and til.Dw is None


def test_dilation_dimension_checks():
    basis = build_lifted_basis(
        BlockStructure.uniform(2), CliqueCover.from_cliques([(1, 2)])
    )
    with pytest.raises(ValueError):
        dilate_plant(Plant(A=np.eye(3), B=np.eye(3)), basis)
    with pytest.raises(ValueError):
        dilate_plant(Plant(A=np.eye(2), B=np.ones((2, 3))), basis)
    rect = build_lifted_basis(
        BlockStructure((1, 1), (2, 2)), CliqueCover.from_cliques([(1, 2)])
    )
    with pytest.raises(ValueError):
        dilate_plant(Plant(A=np.eye(2), B=np.ones((2, 4))), rect)


# -- factorize / recover ----------------------------------------------------

def test_sparse_factorize_round_trip_is_exact():
    rng = np.random.default_rng(46)
    for trial in range(40):
        g, cover, bs = random_cover_instance(rng)
        basis = build_lifted_basis(bs, cover)
        pat = SparsityPattern.from_cover(cover, bs)
        K = rng.standard_normal((bs.m_total, bs.n_total)) * pat.gain_mask
        K_til = sparse_factorize(K, basis)
        Ef = basis.E.astype(float)
        # placement only moves entries, so the round trip is bit-exact
        assert np.max(np.abs(Ef.T @ K_til @ Ef - K)) == 0.0


def test_sparse_factorize_respects_clique_blocks():
    rng = np.random.default_rng(99)
    g, cover, bs = random_cover_instance(rng, max_nodes=7)
    basis = build_lifted_basis(bs, cover)
    pat = SparsityPattern.from_cover(cover, bs)
    K = rng.standard_normal((bs.m_total, bs.n_total)) * pat.gain_mask
    K_til = sparse_factorize(K, basis)
    allowed = np.zeros((basis.lifted_dim, basis.lifted_dim), dtype=bool)
    for lo, hi in basis.clique_row_ranges:
        allowed[lo:hi, lo:hi] = True
    assert not K_til[~allowed].any()


def test_sparse_factorize_rejects_off_pattern_gain():
    basis = build_lifted_basis(
        BlockStructure.uniform(3), CliqueCover.from_cliques([(1, 2), (2, 3)])
    )
    K = np.zeros((3, 3))
    K[0, 2] = 1.0  # nodes 1 and 3 share no clique
    with pytest.raises(PatternViolationError):
        sparse_factorize(K, basis)
    with pytest.raises(ValueError):
        sparse_factorize(np.zeros((2, 2)), basis)


def test_recover_gain_round_trip():
    rng = np.random.default_rng(713)
    for trial in range(25):
        g, cover, bs = random_cover_instance(rng, max_nodes=6)
        basis = build_lifted_basis(bs, cover)
        pat = SparsityPattern.from_cover(cover, bs)
        K = rng.standard_normal((bs.m_total, bs.n_total)) * pat.gain_mask
        # lift K the same way the plant is dilated; squeezing back down
        # through recover_gain (with an identity second factor) returns it
        Ef = basis.E.astype(float)
        Z_til = Ef @ (K / basis.scale) @ Ef.T
        got = recover_gain(Z_til, np.eye(basis.lifted_dim), basis)
        assert np.max(np.abs(got - K)) <= 1e-12


def test_recover_gain_identity_on_single_clique():
    basis = build_lifted_basis(
        BlockStructure.uniform(3), CliqueCover.from_cliques([(1, 2, 3)])
    )
    rng = np.random.default_rng(5)
    K = rng.standard_normal((3, 3))
    G = rng.standard_normal((3, 3)) + 4.0 * np.eye(3)
    got = recover_gain(K @ G, G, basis)
    assert np.max(np.abs(got - K)) <= 1e-10


def test_recover_gain_rejects_singular_factor():
    basis = build_lifted_basis(
        BlockStructure.uniform(2), CliqueCover.from_cliques([(1, 2)])
    )
    G = np.diag([1.0, 0.0])
    with pytest.raises(SingularFactorError):
        recover_gain(np.eye(2), G, basis)
    with pytest.raises(ValueError):
        recover_gain(np.eye(3), np.eye(2), basis)


def test_recover_gain_rejects_leaky_factors():
    basis = build_lifted_basis(
        BlockStructure.uniform(3), CliqueCover.from_cliques([(1, 2), (2, 3)])
    )
    K_bad = np.zeros((3, 3))
    K_bad[0, 2] = 1.0
    Ef = basis.E.astype(float)
    Z_til = Ef @ (K_bad / basis.scale) @ Ef.T
    with pytest.raises(PatternViolationError):
        recover_gain(Z_til, np.eye(basis.lifted_dim), basis)
