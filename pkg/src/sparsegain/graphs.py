"""Undirected communication graphs, clique covers, and random disk graphs.

Nodes are labelled 1..N throughout. A clique cover is an ordered list of
cliques; the cover "represents" a graph when every node appears in some
clique and two distinct nodes share a clique exactly when they are adjacent.
That property is what lets a cover induce the same sparsity pattern as the
graph itself, and everything downstream assumes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

__all__ = [
    "Graph",
    "CliqueCover",
    "UncoveredNodeError",
    "maximal_cliques",
    "is_chordal",
    "cover_represents_graph",
    "disk_graph",
    "membership_counts",
]


class UncoveredNodeError(ValueError):
    """A clique cover leaves one or more nodes in no clique at all."""

    def __init__(self, nodes):
        self.nodes = tuple(sorted(nodes))
        super().__init__(f"nodes not covered by any clique: {list(self.nodes)}")


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes 1..node_count.

    Edges are stored once as (i, j) with i < j; ``has_edge`` accepts either
    orientation. ``positions`` is optional 2-D point metadata (kept so that
    geometrically generated graphs stay reproducible through serialization).
    """

    node_count: int
    edges: frozenset
    positions: tuple | None = None
    _adj: dict = field(default=None, repr=False, compare=False, init=False)

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("graph needs at least one node")
        adj = {i: set() for i in range(1, self.node_count + 1)}
        for e in self.edges:
            i, j = e
            if not (1 <= i < j <= self.node_count):
                raise ValueError(f"bad edge {e!r} for {self.node_count} nodes")
            adj[i].add(j)
            adj[j].add(i)
        if self.positions is not None and len(self.positions) != self.node_count:
            raise ValueError("positions must give one point per node")
        object.__setattr__(self, "_adj", {i: frozenset(s) for i, s in adj.items()})

    @classmethod
    def from_edges(cls, node_count, edges, positions=None):
        """Build a graph from an iterable of (i, j) pairs in any orientation."""
        norm = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) not allowed")
            norm.add((min(i, j), max(i, j)))
        if positions is not None:
            positions = tuple((float(x), float(y)) for x, y in positions)
        return cls(node_count, frozenset(norm), positions)

    @classmethod
    def complete(cls, node_count):
        edges = frozenset(combinations(range(1, node_count + 1), 2))
        return cls(node_count, edges)

    @property
    def edge_count(self):
        return len(self.edges)

    def has_edge(self, i, j):
        if i == j:
            return False
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i):
        return self._adj[i]

    def adjacency_matrix(self):
        """Boolean adjacency matrix (0-indexed), zero diagonal."""
        A = np.zeros((self.node_count, self.node_count), dtype=bool)
        for i, j in self.edges:
            A[i - 1, j - 1] = True
            A[j - 1, i - 1] = True
        return A


@dataclass(frozen=True)
class CliqueCover:
    """An ordered list of cliques plus, per node, which cliques contain it.

    The clique order and the node order inside each clique are part of the
    contract: covers built by :func:`maximal_cliques` sort each clique
    ascending and sort the clique list lexicographically, so identical graphs
    always produce identical covers regardless of edge insertion order.
    """

    cliques: tuple
    per_node_membership: dict = field(repr=False, compare=False)

    @classmethod
    def from_cliques(cls, cliques):
        normalized = tuple(tuple(sorted(int(v) for v in c)) for c in cliques)
        for c in normalized:
            if not c:
                raise ValueError("empty clique in cover")
            if len(set(c)) != len(c):
                raise ValueError(f"repeated node in clique {c}")
        membership = {}
        for k, c in enumerate(normalized):
            for v in c:
                membership.setdefault(v, []).append(k)
        membership = {v: tuple(ks) for v, ks in membership.items()}
        return cls(normalized, membership)

    @property
    def count(self):
        return len(self.cliques)

    def membership(self, node):
        """Indices of the cliques containing ``node`` (empty if uncovered)."""
        return self.per_node_membership.get(node, ())


def maximal_cliques(g):
    """All maximal cliques of ``g`` as a deterministic :class:`CliqueCover`.

    Uses Bron--Kerbosch with pivoting. The result is independent of edge
    iteration order: cliques are sorted ascending internally and the clique
    list is sorted lexicographically by member tuple. An isolated node yields
    the singleton clique {node}.
    """
    adj = {v: set(g.neighbors(v)) for v in range(1, g.node_count + 1)}
    found = []

    def expand(r, p, x):
        if not p and not x:
            found.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda v: (len(adj[v] & p), -v))
        for v in sorted(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(adj), set())
    found.sort()
    return CliqueCover.from_cliques(found)


def is_chordal(g):
    """True iff every cycle of length >= 4 in ``g`` has a chord.

    Runs maximum-cardinality search and then checks that the reversed visit
    order is a perfect elimination ordering.
    """
    n = g.node_count
    adj = {v: set(g.neighbors(v)) for v in range(1, n + 1)}
    weight = {v: 0 for v in adj}
    visited = []
    remaining = set(adj)
    while remaining:
        v = max(remaining, key=lambda u: (weight[u], -u))
        visited.append(v)
        remaining.discard(v)
        for u in adj[v] & remaining:
            weight[u] += 1
    order = visited[::-1]  # candidate perfect elimination ordering
    pos = {v: k for k, v in enumerate(order)}
    for v in order:
        later = [u for u in adj[v] if pos[u] > pos[v]]
        if not later:
            continue
        u0 = min(later, key=pos.get)
        for u in later:
            if u != u0 and u not in adj[u0]:
                return False
    return True


def cover_represents_graph(g, cover):
    """Whether ``cover`` reproduces the adjacency of ``g`` exactly.

    True iff every node of ``g`` lies in some clique and, for every pair of
    distinct nodes, sharing a clique is equivalent to being adjacent. Raises
    ``ValueError`` if some member of ``cover`` is not actually a clique of
    ``g`` (that is a malformed input, not a graceful False).
    """
    for c in cover.cliques:
        for v in c:
            if not (1 <= v <= g.node_count):
                raise ValueError(f"clique {c} mentions node {v} outside 1..{g.node_count}")
        for i, j in combinations(c, 2):
            if not g.has_edge(i, j):
                raise ValueError(f"{c} is not a clique of the graph: ({i},{j}) is not an edge")
    for v in range(1, g.node_count + 1):
        if not cover.membership(v):
            return False
    for i, j in combinations(range(1, g.node_count + 1), 2):
        share = bool(set(cover.membership(i)) & set(cover.membership(j)))
        if share != g.has_edge(i, j):
            return False
    return True


def disk_graph(node_count, radius, seed):
    """Random geometric graph: uniform points in the unit square, edge iff
    the Euclidean distance is <= ``radius``.

    ``seed`` feeds ``numpy.random.default_rng``; the same seed always yields
    the same positions and edges. Positions are retained on the graph.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    rng = np.random.default_rng(seed)
    pts = rng.random((node_count, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    edges = [
        (i + 1, j + 1)
        for i in range(node_count)
        for j in range(i + 1, node_count)
        if dist[i, j] <= radius
    ]
    return Graph.from_edges(node_count, edges, positions=pts)


def membership_counts(cover, node_count):
    """How many cliques contain each of nodes 1..node_count.

    Raises :class:`UncoveredNodeError` (naming the offenders) if any node is
    in no clique, and ``ValueError`` if a clique mentions a node outside the
    range.
    """
    counts = [0] * node_count
    for c in cover.cliques:
        for v in c:
            if not (1 <= v <= node_count):
                raise ValueError(f"clique {c} mentions node {v} outside 1..{node_count}")
            counts[v - 1] += 1
    missing = [v + 1 for v, k in enumerate(counts) if k == 0]
    if missing:
        raise UncoveredNodeError(missing)
    return counts
