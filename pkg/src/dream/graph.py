"""Undirected graph storage in CSR form, GCN normalization, bounded BFS."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from dream.errors import DataError, EmptyGraphError

HOP_DTYPE = np.uint16


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph.

    Both directions of every edge are stored, neighbor lists are sorted
    ascending and self-loops are never stored.
    """

    num_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    features: np.ndarray

    @property
    def d_in(self) -> int:
        return int(self.features.shape[1])

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return len(self.col_indices) // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    def neighbors(self, node: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[node] : self.row_offsets[node + 1]]

    def edge_list(self) -> list[tuple[int, int]]:
        """Undirected edges as (u, v) with u < v, sorted."""
        rows = np.repeat(np.arange(self.num_nodes), self.degrees())
        keep = rows < self.col_indices
        return list(zip(rows[keep].tolist(), self.col_indices[keep].tolist()))

    def validate(self) -> None:
        n = self.num_nodes
        ro, ci = self.row_offsets, self.col_indices
        if len(ro) != n + 1 or ro[0] != 0 or ro[-1] != len(ci):
            raise DataError("row_offsets inconsistent with col_indices")
        if np.any(np.diff(ro) < 0):
            raise DataError("row_offsets must be non-decreasing")
        if len(ci) and (ci.min() < 0 or ci.max() >= n):
            raise DataError("col_indices out of range")
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise DataError(f"features must be {n} x d_in, got {self.features.shape}")
        rows = np.repeat(np.arange(n), np.diff(ro))
        if np.any(rows == ci):
            raise DataError("self-loops must not be stored")
        for i in range(n):
            nb = ci[ro[i] : ro[i + 1]]
            if np.any(np.diff(nb) <= 0):
                raise DataError(f"neighbor list of node {i} not strictly ascending")
        fwd = set(zip(rows.tolist(), ci.tolist()))
        if any((v, u) not in fwd for u, v in fwd):
            raise DataError("adjacency is not symmetric")


def build_graph(edges, features, num_nodes: int | None = None) -> Graph:
    """Build a Graph from an edge list, dropping duplicates and self-loops.

    ``num_nodes`` defaults to the number of feature rows.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim == 1:
        feats = feats.reshape(-1, 1)
    n = feats.shape[0] if num_nodes is None else int(num_nodes)
    if n == 0:
        raise EmptyGraphError("graph has no nodes")
    if feats.shape[0] != n:
        raise DataError(f"expected {n} feature rows, got {feats.shape[0]}")
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) and (e.min() < 0 or e.max() >= n):
        bad = e[(e < 0).any(axis=1) | (e >= n).any(axis=1)][0]
        raise DataError(f"edge endpoint out of range [0, {n}): {tuple(bad.tolist())}")
    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]])
    both = np.unique(both, axis=0)  # lexicographic, so rows then sorted columns
    counts = np.bincount(both[:, 0], minlength=n) if len(both) else np.zeros(n, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    cols = both[:, 1].astype(np.int64) if len(both) else np.zeros(0, dtype=np.int64)
    feats = feats.copy()
    for arr in (offsets, cols, feats):
        arr.setflags(write=False)
    return Graph(num_nodes=n, row_offsets=offsets, col_indices=cols, features=feats)


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """D~^-1/2 (A + I) D~^-1/2 in CSR layout, diagonal entries included."""

    num_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    weights: np.ndarray

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        n = self.num_nodes
        return sp.csr_matrix((self.weights, self.col_indices, self.row_offsets), shape=(n, n))

    def value(self, i: int, j: int) -> float:
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        k = lo + np.searchsorted(self.col_indices[lo:hi], j)
        if k < hi and self.col_indices[k] == j:
            return float(self.weights[k])
        return 0.0

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def normalize_adjacency(g: Graph) -> NormalizedAdjacency:
    n = g.num_nodes
    deg = g.degrees()
    rows = np.repeat(np.arange(n), deg)
    # merge the diagonal into each sorted neighbor list
    r = np.concatenate([rows, np.arange(n)])
    c = np.concatenate([g.col_indices, np.arange(n)])
    order = np.lexsort((c, r))
    r, c = r[order], c[order]
    d1 = (deg + 1).astype(np.float64)
    w = 1.0 / np.sqrt(d1[r] * d1[c])
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg + 1, out=offsets[1:])
    return NormalizedAdjacency(num_nodes=n, row_offsets=offsets, col_indices=c, weights=w)


def spmm(adj: NormalizedAdjacency, dense: np.ndarray) -> np.ndarray:
    """Sparse-dense product ``adj @ dense``."""
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim not in (1, 2) or dense.shape[0] != adj.num_nodes:
        raise DataError(f"spmm: dense operand has {dense.shape[0]} rows, adjacency has {adj.num_nodes}")
    return np.asarray(adj.matrix @ dense)


def bounded_ball(g: Graph, source: int, d_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes at hop distance 1..d_max from ``source`` and their distances, sorted by node."""
    if not 0 <= source < g.num_nodes:
        raise DataError(f"source {source} out of range")
    if d_max < 1:
        raise DataError("d_max must be >= 1")
    dist = {source: 0}
    queue = deque([source])
    ro, ci = g.row_offsets, g.col_indices
    while queue:
        u = queue.popleft()
        du = dist[u]
        if du == d_max:
            continue
        for v in ci[ro[u] : ro[u + 1]].tolist():
            if v not in dist:
                dist[v] = du + 1
                queue.append(v)
    del dist[source]
    nodes = np.array(sorted(dist), dtype=np.int64)
    hops = np.array([dist[v] for v in nodes.tolist()], dtype=HOP_DTYPE)
    return nodes, hops


def bounded_geodesics(g: Graph, source: int, d_max: int) -> dict[int, int]:
    """Map node -> hop count for every node with 1 <= distance <= d_max."""
    nodes, hops = bounded_ball(g, source, d_max)
    return dict(zip(nodes.tolist(), hops.tolist()))
