"""Clique-based lifting of block-structured plants.

The central object is the selector matrix E: for each clique of a cover, E
stacks the identity rows that pick out the state blocks of that clique's
nodes (nodes ascending within a clique, cliques in cover order). Useful
facts, all exercised by the tests:

* ``E^T E`` is diagonal with integer entries: node i's block carries the
  number of cliques containing i.
* ``N = I - E (E^T E)^{-1} E^T`` is the orthogonal projector onto the null
  space of ``E^T``; lifted matrices that are exact lifts of node-level ones
  commute with it in the right ways.
* Any gain with the cover's sparsity factors exactly through clique-level
  blocks, and conversely clique-block matrices project back down to patterned
  gains. ``sparse_factorize`` / ``recover_gain`` are those two directions.

The "dilated" plant replaces (A, B, Bv, C, D) by their lifted counterparts so
that clique-block-diagonal decision variables can certify node-level
closed-loop properties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import block_diag

from .graphs import CliqueCover, Graph, cover_represents_graph, membership_counts

__all__ = [
    "BlockStructure",
    "Plant",
    "SparsityPattern",
    "LiftedBasis",
    "DilatedPlant",
    "SingularFactorError",
    "PatternViolationError",
    "build_lifted_basis",
    "dilate_plant",
    "sparse_factorize",
    "recover_gain",
    "pattern_test",
    "max_off_pattern",
]


class SingularFactorError(ValueError):
    """A factor that must be inverted is singular or too ill-conditioned."""


class PatternViolationError(ValueError):
    """A matrix has (significant) entries outside the allowed sparsity pattern."""


def _frozen_array(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BlockStructure:
    """Per-node state and input block sizes for an interconnected system."""

    n_sizes: tuple
    m_sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "n_sizes", tuple(int(k) for k in self.n_sizes))
        object.__setattr__(self, "m_sizes", tuple(int(k) for k in self.m_sizes))
        if len(self.n_sizes) != len(self.m_sizes):
            raise ValueError("n_sizes and m_sizes must have one entry per node")
        if not self.n_sizes:
            raise ValueError("need at least one node")
        if any(k < 1 for k in self.n_sizes) or any(k < 1 for k in self.m_sizes):
            raise ValueError("block sizes must be positive")

    @classmethod
    def uniform(cls, node_count, state_size=1, input_size=None):
        if input_size is None:
            input_size = state_size
        return cls((state_size,) * node_count, (input_size,) * node_count)

    @property
    def node_count(self):
        return len(self.n_sizes)

    @property
    def n_total(self):
        return sum(self.n_sizes)

    @property
    def m_total(self):
        return sum(self.m_sizes)

    @cached_property
    def state_offsets(self):
        """Start offset of each node's state block (plus a final sentinel)."""
        return tuple(np.concatenate(([0], np.cumsum(self.n_sizes))).tolist())

    @cached_property
    def input_offsets(self):
        return tuple(np.concatenate(([0], np.cumsum(self.m_sizes))).tolist())

    @property
    def square_blocks(self):
        return self.n_sizes == self.m_sizes

    def require_square_blocks(self):
        if not self.square_blocks:
            raise ValueError(
                "this operation needs n_i = m_i for every node "
                f"(got n_sizes={self.n_sizes}, m_sizes={self.m_sizes})"
            )


@dataclass(frozen=True)
class Plant:
    """Discrete-time plant x+ = A x + B u (+ Bv v), y = C x + D u + Dw v.

    The performance channel (Bv, C, D, Dw) is optional as a group: either all
    four are given or none, so stabilization-only instances stay small.
    """

    A: np.ndarray
    B: np.ndarray
    Bv: np.ndarray | None = None
    C: np.ndarray | None = None
    D: np.ndarray | None = None
    Dw: np.ndarray | None = None

    def __post_init__(self):
        A = _frozen_array(self.A)
        B = _frozen_array(self.B)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        if B.ndim != 2 or B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got shape {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        perf = [self.Bv, self.C, self.D, self.Dw]
        if any(x is None for x in perf) != all(x is None for x in perf):
            raise ValueError("give all of Bv, C, D, Dw or none of them")
        if self.Bv is not None:
            Bv = _frozen_array(self.Bv)
            C = _frozen_array(self.C)
            D = _frozen_array(self.D)
            Dw = _frozen_array(self.Dw)
            if Bv.ndim != 2 or Bv.shape[0] != n:
                raise ValueError(f"Bv must have {n} rows, got shape {Bv.shape}")
            if C.ndim != 2 or C.shape[1] != n:
                raise ValueError(f"C must have {n} columns, got shape {C.shape}")
            l = C.shape[0]
            if D.shape != (l, B.shape[1]):
                raise ValueError(f"D must be {(l, B.shape[1])}, got {D.shape}")
            if Dw.shape != (l, Bv.shape[1]):
                raise ValueError(
                    f"Dw must be {(l, Bv.shape[1])} (performance rows x disturbance "
                    f"columns), got {Dw.shape}"
                )
            object.__setattr__(self, "Bv", Bv)
            object.__setattr__(self, "C", C)
            object.__setattr__(self, "D", D)
            object.__setattr__(self, "Dw", Dw)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def has_performance(self):
        return self.Bv is not None

    @property
    def m_v(self):
        return None if self.Bv is None else self.Bv.shape[1]

    @property
    def l(self):
        return None if self.C is None else self.C.shape[0]

    def require_performance(self):
        if not self.has_performance:
            raise ValueError("plant has no performance channel (Bv, C, D, Dw)")


@dataclass(frozen=True)
class SparsityPattern:
    """Block-level sparsity mask over node pairs, expandable to entry level.

    ``block_mask[i, j]`` (0-indexed) says whether gain block K_{ij} may be
    nonzero. Diagonal blocks are always allowed; off-diagonal blocks follow
    the graph's edges (or clique co-membership, which coincides for covers
    that represent the graph).
    """

    block_mask: np.ndarray
    structure: BlockStructure

    def __post_init__(self):
        mask = np.array(self.block_mask, dtype=bool)
        N = self.structure.node_count
        if mask.shape != (N, N):
            raise ValueError(f"block mask must be {N}x{N}, got {mask.shape}")
        if not np.array_equal(mask, mask.T):
            raise ValueError("block mask must be symmetric")
        if not mask.diagonal().all():
            raise ValueError("diagonal blocks must be allowed")
        mask.setflags(write=False)
        object.__setattr__(self, "block_mask", mask)

    @classmethod
    def from_graph(cls, g, structure):
        if g.node_count != structure.node_count:
            raise ValueError("graph and block structure disagree on node count")
        mask = g.adjacency_matrix() | np.eye(g.node_count, dtype=bool)
        return cls(mask, structure)

    @classmethod
    def from_cover(cls, cover, structure):
        N = structure.node_count
        mask = np.eye(N, dtype=bool)
        for c in cover.cliques:
            for i in c:
                for j in c:
                    if not (1 <= i <= N):
                        raise ValueError(f"clique node {i} outside 1..{N}")
                    mask[i - 1, j - 1] = True
        return cls(mask, structure)

    def _expand(self, row_sizes, col_sizes):
        rows = np.repeat(np.arange(len(row_sizes)), row_sizes)
        cols = np.repeat(np.arange(len(col_sizes)), col_sizes)
        out = self.block_mask[np.ix_(rows, cols)]
        out.setflags(write=False)
        return out

    @cached_property
    def gain_mask(self):
        """Entry-level mask for an (m_total x n_total) gain matrix."""
        return self._expand(self.structure.m_sizes, self.structure.n_sizes)

    @cached_property
    def state_mask(self):
        """Entry-level mask for an (n_total x n_total) state-side matrix."""
        return self._expand(self.structure.n_sizes, self.structure.n_sizes)


@dataclass(frozen=True)
class LiftedBasis:
    """Selector matrix E for a (structure, cover) pair plus derived objects.

    ``E`` stacks, clique by clique, the rows of the identity that select each
    member node's state block. ``counts`` are the per-node clique membership
    counts, so ``E^T E = diag(scale)`` exactly, with ``scale`` integer.
    ``N`` projects onto null(E^T) and ``M = blkdiag(N, N)``.
    """

    structure: BlockStructure
    cover: CliqueCover
    E: np.ndarray
    counts: tuple
    clique_row_ranges: tuple
    clique_block_sizes: tuple

    @property
    def lifted_dim(self):
        return self.E.shape[0]

    @cached_property
    def scale(self):
        """Integer diagonal of E^T E (one entry per lifted-down coordinate)."""
        out = np.repeat(np.array(self.counts, dtype=np.int64), self.structure.n_sizes)
        out.setflags(write=False)
        return out

    @cached_property
    def projector(self):
        """N = I - E (E^T E)^{-1} E^T, the orthogonal projector onto null(E^T)."""
        Ef = self.E.astype(float)
        out = np.eye(self.lifted_dim) - (Ef / self.scale) @ Ef.T
        out.setflags(write=False)
        return out

    @cached_property
    def doubled_projector(self):
        """M = blkdiag(N, N) acting on the doubled lifted space."""
        out = block_diag(self.projector, self.projector)
        out.setflags(write=False)
        return out

    def lift_down(self, X_lifted):
        """(E^T E)^{-1} E^T X E for a lifted x lifted matrix: exact inverse of
        lifting when X is an exact lift."""
        Ef = self.E.astype(float)
        return (Ef.T @ X_lifted @ Ef) / self.scale[:, None]


@dataclass(frozen=True)
class DilatedPlant:
    """Plant data pushed to the lifted space; feedthrough Dw stays put."""

    A: np.ndarray
    B: np.ndarray
    Bv: np.ndarray | None
    C: np.ndarray | None
    D: np.ndarray | None
    Dw: np.ndarray | None
    basis: LiftedBasis


def build_lifted_basis(structure, cover, graph=None):
    """Construct the selector matrix and friends for a cover.

    Raises :class:`~sparsegain.graphs.UncoveredNodeError` when the cover
    misses a node, and ``ValueError`` when ``graph`` is supplied but the
    cover does not reproduce its adjacency.
    """
    counts = membership_counts(cover, structure.node_count)
    if graph is not None and not cover_represents_graph(graph, cover):
        raise ValueError("clique cover does not reproduce the graph's adjacency")
    n = structure.n_total
    offsets = structure.state_offsets
    rows = []
    ranges = []
    block_sizes = []
    at = 0
    for c in cover.cliques:
        size = sum(structure.n_sizes[v - 1] for v in c)
        for v in c:
            lo, hi = offsets[v - 1], offsets[v]
            block = np.zeros((hi - lo, n), dtype=np.int64)
            block[np.arange(hi - lo), np.arange(lo, hi)] = 1
            rows.append(block)
        ranges.append((at, at + size))
        block_sizes.append(size)
        at += size
    E = np.vstack(rows)
    E.setflags(write=False)
    return LiftedBasis(
        structure=structure,
        cover=cover,
        E=E,
        counts=tuple(counts),
        clique_row_ranges=tuple(ranges),
        clique_block_sizes=tuple(block_sizes),
    )


def dilate_plant(plant, basis):
    """Lift plant matrices so clique-block variables can act on them.

    A and B become E A (E^T E)^{-1} E^T and E B (E^T E)^{-1} E^T (square,
    lifted x lifted); Bv becomes E Bv; C and D get (E^T E)^{-1} E^T on the
    right; Dw is untouched. The (E^T E)^{-1} factor is applied as an exact
    integer-reciprocal column scaling, never via a generic solve.
    """
    structure = basis.structure
    if plant.n != structure.n_total:
        raise ValueError("plant state dimension does not match the block structure")
    if plant.m != structure.m_total:
        raise ValueError("plant input dimension does not match the block structure")
    structure.require_square_blocks()
    Ef = basis.E.astype(float)
    d = basis.scale.astype(float)
    A_til = Ef @ (plant.A / d) @ Ef.T
    B_til = Ef @ (plant.B / d) @ Ef.T
    Bv_til = C_til = D_til = Dw = None
    if plant.has_performance:
        Bv_til = Ef @ plant.Bv
        C_til = (plant.C / d) @ Ef.T
        D_til = (plant.D / d) @ Ef.T
        Dw = plant.Dw
    return DilatedPlant(A=A_til, B=B_til, Bv=Bv_til, C=C_til, D=D_til, Dw=Dw, basis=basis)


def sparse_factorize(K, basis):
    """Place a patterned gain into clique-block-diagonal form exactly.

    Every nonzero block K_{ij} is assigned to the first clique (in cover
    order) containing both i and j; the result ``K_til`` satisfies
    ``E^T K_til E scaled back == K`` with no floating-point error, because
    the op only moves entries. Raises :class:`PatternViolationError` if some
    nonzero block has no covering clique.
    """
    structure = basis.structure
    structure.require_square_blocks()
    K = np.asarray(K, dtype=float)
    if K.shape != (structure.m_total, structure.n_total):
        raise ValueError(
            f"gain must be {(structure.m_total, structure.n_total)}, got {K.shape}"
        )
    cover = basis.cover
    offsets = structure.state_offsets
    L = basis.lifted_dim
    # lifted offset of node v's block inside clique k
    lifted_at = {}
    for k, c in enumerate(cover.cliques):
        at = basis.clique_row_ranges[k][0]
        for v in c:
            lifted_at[(k, v)] = at
            at += structure.n_sizes[v - 1]
    K_til = np.zeros((L, L))
    N = structure.node_count
    for i in range(1, N + 1):
        ri, rj = offsets[i - 1], offsets[i]
        for j in range(1, N + 1):
            ci, cj = offsets[j - 1], offsets[j]
            block = K[ri:rj, ci:cj]
            if not block.any():
                continue
            shared = [k for k in basis.cover.membership(i) if (k, j) in lifted_at]
            if not shared:
                raise PatternViolationError(
                    f"gain block ({i},{j}) is nonzero but no clique contains both nodes"
                )
            k = shared[0]
            a, b = lifted_at[(k, i)], lifted_at[(k, j)]
            K_til[a : a + (rj - ri), b : b + (cj - ci)] = block
    return K_til


def recover_gain(Z_til, G_til, basis, rcond_min=1e-12, pattern_rel_tol=1e-8):
    """Project clique-block factors down to a node-level patterned gain.

    Computes ``(E^T E)^{-1} E^T Z_til G_til^{-1} E``. Raises
    :class:`SingularFactorError` when ``G_til`` has reciprocal condition
    number below ``rcond_min``, and :class:`PatternViolationError` when the
    projected gain leaks outside the cover's pattern by more than
    ``pattern_rel_tol`` relative to its largest entry (a symptom of a
    numerically meaningless factor, since exact arithmetic guarantees the
    pattern)."""
    structure = basis.structure
    structure.require_square_blocks()
    L = basis.lifted_dim
    Z_til = np.asarray(Z_til, dtype=float)
    G_til = np.asarray(G_til, dtype=float)
    if Z_til.shape != (L, L) or G_til.shape != (L, L):
        raise ValueError(f"factors must be {L}x{L}")
    cond = np.linalg.cond(G_til)
    if not np.isfinite(cond) or cond > 1.0 / rcond_min:
        raise SingularFactorError(
            f"factor is singular to working precision (rcond ~ {1.0 / cond:.2e})"
        )
    Ef = basis.E.astype(float)
    X = np.linalg.solve(G_til, Ef)
    K = (Ef.T @ (Z_til @ X)) / basis.scale[:, None]
    pattern = SparsityPattern.from_cover(basis.cover, structure)
    leak = max_off_pattern(K, pattern)
    scale = max(1.0, float(np.max(np.abs(K))) if K.size else 1.0)
    if leak > pattern_rel_tol * scale:
        raise PatternViolationError(
            f"recovered gain leaks off-pattern by {leak:.3e} (relative tolerance "
            f"{pattern_rel_tol:g}); the factors are numerically unreliable"
        )
    return K


def max_off_pattern(K, pattern):
    """Largest magnitude among entries the pattern forbids (0.0 if none)."""
    K = np.asarray(K, dtype=float)
    mask = pattern.gain_mask
    if K.shape != mask.shape:
        raise ValueError(f"gain must be {mask.shape}, got {K.shape}")
    forbidden = ~mask
    if not forbidden.any():
        return 0.0
    return float(np.max(np.abs(K[forbidden])))


def pattern_test(K, pattern, rel_tol=1e-8):
    """Whether ``K`` respects ``pattern`` up to ``rel_tol`` relative noise.

    The comparison scale is ``max(1, max|K|)`` so the test is meaningful for
    both tiny and large gains."""
    K = np.asarray(K, dtype=float)
    scale = max(1.0, float(np.max(np.abs(K))) if K.size else 1.0)
    return max_off_pattern(K, pattern) <= rel_tol * scale
