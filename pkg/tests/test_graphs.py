"""Graph, clique-cover, and disk-graph tests.

The clique and chordality routines are cross-checked against brute-force
subset oracles on small random graphs, so the fast implementations never
get to grade their own homework.
"""

import itertools

import numpy as np
import pytest

from sparsegain.graphs import (
    CliqueCover,
    Graph,
    UncoveredNodeError,
    cover_represents_graph,
    disk_graph,
    is_chordal,
    maximal_cliques,
    membership_counts,
)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(1, n)])


def random_graph(rng, n, p):
    edges = [(i, j) for i, j in itertools.combinations(range(1, n + 1), 2)
             if rng.random() < p]
    return Graph.from_edges(n, edges)


# -- brute-force oracles ----------------------------------------------------

def brute_maximal_cliques(g):
    nodes = range(1, g.node_count + 1)
    cliques = []
    for r in range(1, g.node_count + 1):
        for sub in itertools.combinations(nodes, r):
            if all(g.has_edge(i, j) for i, j in itertools.combinations(sub, 2)):
                cliques.append(set(sub))
    maximal = [c for c in cliques if not any(c < d for d in cliques)]
    return sorted(tuple(sorted(c)) for c in maximal)


def brute_is_chordal(g):
    """No induced cycle of length >= 4: check every vertex subset."""
    nodes = range(1, g.node_count + 1)
    for r in range(4, g.node_count + 1):
        for sub in itertools.combinations(nodes, r):
            deg = {v: sum(g.has_edge(v, u) for u in sub if u != v) for v in sub}
            if any(d != 2 for d in deg.values()):
                continue
            # 2-regular induced subgraph: connected means a chordless cycle
            seen = {sub[0]}
            frontier = [sub[0]]
            while frontier:
                v = frontier.pop()
                for u in sub:
                    if u not in seen and g.has_edge(v, u):
                        seen.add(u)
                        frontier.append(u)
            if len(seen) == r:
                return False
    return True


# -- Graph basics -----------------------------------------------------------

def test_graph_edges_normalized_and_queryable():
    g = Graph.from_edges(4, [(2, 1), (3, 2), (4, 3)])
    assert g.edges == frozenset({(1, 2), (2, 3), (3, 4)})
    assert g.edge_count == 3
    assert g.has_edge(1, 2) and g.has_edge(2, 1)
    assert not g.has_edge(1, 3)
    assert not g.has_edge(2, 2)
    assert g.neighbors(2) == frozenset({1, 3})
    assert g.neighbors(1) == frozenset({2})


def test_graph_adjacency_matrix():
    g = path_graph(3)
    A = g.adjacency_matrix()
    assert A.dtype == bool
    assert np.array_equal(A, A.T)
    assert not A.diagonal().any()
    assert A[0, 1] and A[1, 2] and not A[0, 2]


def test_graph_complete():
    g = Graph.complete(5)
    assert g.edge_count == 10
    assert all(g.has_edge(i, j) for i in range(1, 6) for j in range(1, 6) if i != j)


def test_graph_rejects_bad_input():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 4)])
    with pytest.raises(ValueError):
        Graph(0, frozenset())
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 2)], positions=[(0.0, 0.0)])


# -- clique covers ----------------------------------------------------------

def test_cover_normalizes_and_tracks_membership():
    cover = CliqueCover.from_cliques([(3, 1, 2), (2, 4)])
    assert cover.cliques == ((1, 2, 3), (2, 4))
    assert cover.count == 2
    assert cover.membership(2) == (0, 1)
    assert cover.membership(4) == (1,)
    assert cover.membership(9) == ()


def test_cover_rejects_degenerate_cliques():
    with pytest.raises(ValueError):
        CliqueCover.from_cliques([()])
    with pytest.raises(ValueError):
        CliqueCover.from_cliques([(1, 1, 2)])


def test_membership_counts_and_uncovered_error():
    cover = CliqueCover.from_cliques([(1, 2), (2, 3)])
    assert membership_counts(cover, 3) == [1, 2, 1]
    bad = CliqueCover.from_cliques([(1, 2)])
    with pytest.raises(UncoveredNodeError) as exc:
        membership_counts(bad, 4)
    assert exc.value.nodes == (3, 4)
    with pytest.raises(ValueError):
        membership_counts(CliqueCover.from_cliques([(1, 5)]), 3)


# -- maximal cliques --------------------------------------------------------

def test_maximal_cliques_frozen_examples():
    assert maximal_cliques(path_graph(4)).cliques == ((1, 2), (2, 3), (3, 4))
    tri = Graph.from_edges(3, [(1, 2), (2, 3), (1, 3)])
    assert maximal_cliques(tri).cliques == ((1, 2, 3),)
    square = Graph.from_edges(4, [(1, 2), (2, 3), (3, 4), (1, 4)])
    assert maximal_cliques(square).cliques == ((1, 2), (1, 4), (2, 3), (3, 4))


def test_maximal_cliques_isolated_node_is_singleton():
    g = Graph.from_edges(3, [(1, 2)])
    assert maximal_cliques(g).cliques == ((1, 2), (3,))


def test_maximal_cliques_order_independent_of_edge_input():
    edges = [(1, 2), (2, 3), (1, 3), (3, 4), (4, 5), (3, 5)]
    g1 = Graph.from_edges(5, edges)
    g2 = Graph.from_edges(5, edges[::-1])
    assert maximal_cliques(g1).cliques == maximal_cliques(g2).cliques


def test_maximal_cliques_against_brute_force():
    rng = np.random.default_rng(20240811)
    for trial in range(80):
        n = int(rng.integers(1, 9))
        g = random_graph(rng, n, float(rng.random()))
        got = list(maximal_cliques(g).cliques)
        assert got == brute_maximal_cliques(g), f"trial {trial}"


# -- chordality -------------------------------------------------------------

def test_is_chordal_frozen_examples():
    assert is_chordal(path_graph(5))
    assert is_chordal(Graph.complete(6))
    square = Graph.from_edges(4, [(1, 2), (2, 3), (3, 4), (1, 4)])
    assert not is_chordal(square)
    chorded = Graph.from_edges(4, [(1, 2), (2, 3), (3, 4), (1, 4), (1, 3)])
    assert is_chordal(chorded)


def test_is_chordal_against_brute_force():
    rng = np.random.default_rng(5150)
    for trial in range(80):
        n = int(rng.integers(1, 9))
        g = random_graph(rng, n, float(rng.random()))
        assert is_chordal(g) == brute_is_chordal(g), f"trial {trial}"


# -- cover / graph agreement ------------------------------------------------

def test_cover_represents_graph_positive_and_negative():
    tri = Graph.from_edges(3, [(1, 2), (2, 3), (1, 3)])
    assert cover_represents_graph(tri, CliqueCover.from_cliques([(1, 2, 3)]))
    # both cliques are genuine cliques, but nodes 1 and 3 are adjacent
    # without ever sharing one, so the biconditional fails
    assert not cover_represents_graph(tri, CliqueCover.from_cliques([(1, 2), (2, 3)]))


def test_cover_represents_graph_uncovered_node_is_false():
    g = path_graph(3)
    assert not cover_represents_graph(g, CliqueCover.from_cliques([(1, 2)]))


def test_cover_with_non_clique_member_raises():
    g = path_graph(3)
    with pytest.raises(ValueError):
        cover_represents_graph(g, CliqueCover.from_cliques([(1, 3)]))
    with pytest.raises(ValueError):
        cover_represents_graph(g, CliqueCover.from_cliques([(1, 7)]))


def test_maximal_clique_cover_represents_random_graphs():
    rng = np.random.default_rng(99)
    for _ in range(40):
        n = int(rng.integers(1, 9))
        g = random_graph(rng, n, float(rng.random()))
        assert cover_represents_graph(g, maximal_cliques(g))


# -- disk graphs ------------------------------------------------------------

def test_disk_graph_deterministic():
    a = disk_graph(12, 0.3, seed=7)
    b = disk_graph(12, 0.3, seed=7)
    assert a.edges == b.edges
    assert a.positions == b.positions
    c = disk_graph(12, 0.3, seed=8)
    assert a.edges != c.edges or a.positions != c.positions


def test_disk_graph_radius_extremes():
    assert disk_graph(10, 0.0, seed=1).edge_count == 0
    full = disk_graph(10, 1.5, seed=1)  # > sqrt(2) covers the unit square
    assert full.edge_count == 45
    with pytest.raises(ValueError):
        disk_graph(5, -0.1, seed=0)


def test_disk_graph_edges_match_positions():
    g = disk_graph(15, 0.35, seed=42)
    pts = np.asarray(g.positions)
    for i in range(1, 16):
        for j in range(i + 1, 16):
            d = float(np.hypot(*(pts[i - 1] - pts[j - 1])))
            assert g.has_edge(i, j) == (d <= 0.35)


def test_disk_graph_continues_a_generator_stream():
    # passing a Generator must consume from it, not reseed
    rng = np.random.default_rng(0)
    g1 = disk_graph(6, 0.4, seed=rng)
    g2 = disk_graph(6, 0.4, seed=rng)
    assert g1.positions != g2.positions
