"""Exact kNN, symmetrized neighbor graphs, graph geodesics and landmarks.

Tie handling is deterministic everywhere: neighbor lists break distance ties
by ascending sample index, and shortest-path trees use the smallest-index
predecessor among all tight edges (|d[u] + w(u, v) - d[v]| <= 1e-12).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from ._backend import kernels, run_chunks
from .datamodel import as_matrix

__all__ = [
    "DisconnectedGraphError",
    "NeighborIndex",
    "NeighborGraph",
    "GeodesicTable",
    "pairwise_distances",
    "knn",
    "build_graph",
    "smallest_connecting_k",
    "shortest_paths",
    "throughput_counts",
    "landmark_select",
    "overlap",
]

TIE_TOL = 1e-12


class DisconnectedGraphError(ValueError):
    """A graph operation needed a connected graph."""


def pairwise_distances(M) -> np.ndarray:
    """All-pairs Euclidean distances between the columns of ``M``."""
    X = as_matrix(M)
    return cdist(X.T, X.T)


@dataclass(frozen=True, eq=False)
class NeighborIndex:
    """``lists[i]`` holds the k nearest samples to ``i`` (self excluded)."""

    k: int
    lists: np.ndarray
    distances: np.ndarray

    @property
    def count(self) -> int:
        return self.lists.shape[0]

    def __getitem__(self, i):
        return self.lists[i]


def _sorted_order(M):
    D = pairwise_distances(M)
    np.fill_diagonal(D, np.inf)
    order = np.argsort(D, axis=1, kind="stable")[:, :-1]
    return order, np.take_along_axis(D, order, axis=1)


def _check_k(k, count):
    if not 1 <= k < count:
        raise ValueError(f"k must satisfy 1 <= k < {count}, got {k}")


def knn(M, k: int) -> NeighborIndex:
    """Exact k nearest neighbors under Euclidean distance."""
    X = as_matrix(M)
    _check_k(k, X.shape[1])
    order, dists = _sorted_order(X)
    return NeighborIndex(k, order[:, :k].copy(), dists[:, :k].copy())


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Undirected weighted kNN graph in CSR form (both edge directions stored)."""

    n_nodes: int
    k: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    labels: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.labels.max()) + 1 if self.n_nodes else 0

    @property
    def connected(self) -> bool:
        return self.n_components == 1

    def neighbors(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def edges(self):
        """Undirected edge list ``(i, j, w)`` with ``i < j``."""
        tails = np.repeat(np.arange(self.n_nodes), np.diff(self.indptr))
        keep = tails < self.indices
        return list(zip(tails[keep].tolist(), self.indices[keep].tolist(), self.weights[keep].tolist()))


def _graph_from_lists(lists, dists, k):
    n = lists.shape[0]
    rows = np.repeat(np.arange(n), lists.shape[1])
    cols = lists.ravel()
    w = dists.ravel()
    # coincident samples give zero-length edges; they are left out
    keep = w > 0
    A = coo_matrix((w[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    A = A.maximum(A.T).tocsr()
    A.sort_indices()
    _, labels = connected_components(A, directed=False)
    return NeighborGraph(
        n_nodes=n,
        k=k,
        indptr=A.indptr.astype(np.int64),
        indices=A.indices.astype(np.int64),
        weights=A.data.astype(np.float64),
        labels=labels.astype(np.int64),
    )


def build_graph(M, k: int) -> NeighborGraph:
    """Symmetrized kNN graph: edge (i, j) iff j in kNN(i) or i in kNN(j)."""
    index = knn(M, k)
    return _graph_from_lists(index.lists, index.distances, k)


def smallest_connecting_k(M, k0: int) -> int:
    """Smallest ``k >= k0`` whose kNN graph has a single component."""
    X = as_matrix(M)
    n = X.shape[1]
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    if n < 2:
        return k0
    order, dists = _sorted_order(X)
    for k in range(min(k0, n - 1), n):
        if _graph_from_lists(order[:, :k], dists[:, :k], k).connected:
            return max(k, k0)
    raise DisconnectedGraphError("graph stays disconnected at k = count - 1 (coincident samples?)")


def connected_graph(M, k: int):
    """Graph at ``k``, escalated to the smallest connecting k when needed.

    Returns ``(graph, escalated)``.
    """
    graph = build_graph(M, k)
    if graph.connected:
        return graph, False
    k_conn = smallest_connecting_k(M, k)
    return build_graph(M, k_conn), True


@dataclass(frozen=True, eq=False)
class GeodesicTable:
    """Shortest-path lengths (and canonical predecessors) from each source."""

    sources: np.ndarray
    distances: np.ndarray
    predecessors: np.ndarray | None = None

    def row(self, source: int) -> int:
        hits = np.flatnonzero(self.sources == source)
        if hits.size == 0:
            raise KeyError(f"{source} is not a source of this table")
        return int(hits[0])

    def path(self, source: int, target: int) -> list[int]:
        """Canonical shortest path from ``source`` to ``target`` (inclusive)."""
        if self.predecessors is None:
            raise ValueError("table was computed without predecessors")
        pred = self.predecessors[self.row(source)]
        path = [int(target)]
        while path[-1] != source:
            p = int(pred[path[-1]])
            if p < 0:
                raise DisconnectedGraphError(f"node {target} unreachable from {source}")
            path.append(p)
        return path[::-1]


def shortest_paths(G: NeighborGraph, sources, predecessors=True, threads=None) -> GeodesicTable:
    """Dijkstra from every source; raises if any node is unreachable."""
    sources = np.asarray(sources, dtype=np.int64).ravel()
    if sources.size == 0:
        raise ValueError("sources must be non-empty")
    if np.any((sources < 0) | (sources >= G.n_nodes)):
        raise IndexError("source index out of range")

    def work(chunk):
        src = sources[chunk.start:chunk.stop]
        d = kernels.dijkstra_rows(G.indptr, G.indices, G.weights, src)
        p = None
        if predecessors:
            p = kernels.canonical_predecessors(G.indptr, G.indices, G.weights, d, src, TIE_TOL)
        return d, p

    parts = run_chunks(work, sources.size, threads)
    dist = np.vstack([d for d, _ in parts])
    unreachable = np.argwhere(np.isinf(dist))
    if unreachable.size:
        r, v = unreachable[0]
        raise DisconnectedGraphError(
            f"node {int(v)} is unreachable from source {int(sources[r])} "
            f"({G.n_components} components)"
        )
    pred = np.vstack([p for _, p in parts]) if predecessors else None
    return GeodesicTable(sources, dist, pred)


def throughput_counts(G: NeighborGraph, table: GeodesicTable | None = None, threads=None) -> np.ndarray:
    """For each node, how many canonical paths s -> t (s < t) pass through it.

    Path endpoints are not counted. ``table`` must hold every node as a
    source, in index order, with predecessors.
    """
    if table is None:
        table = shortest_paths(G, np.arange(G.n_nodes), threads=threads)
    elif table.predecessors is None or not np.array_equal(table.sources, np.arange(G.n_nodes)):
        raise ValueError("throughput needs an all-sources table with predecessors")

    def work(chunk):
        sl = slice(chunk.start, chunk.stop)
        order = np.argsort(table.distances[sl], axis=1, kind="stable")
        return kernels.interior_counts(table.predecessors[sl], order, table.sources[sl])

    return np.sum(run_chunks(work, G.n_nodes, threads), axis=0)


def landmark_count(n: int, fraction: float) -> int:
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    # guard against 0.1 * 1000 landing a hair above an integer
    return min(n, max(1, math.ceil(fraction * n - 1e-9)))


def landmark_select(G: NeighborGraph, fraction: float = 0.10, table=None, threads=None) -> np.ndarray:
    """The ``ceil(fraction * N)`` nodes with the highest path throughput.

    Ties break by ascending index; the result is sorted ascending.
    """
    if not G.connected:
        raise DisconnectedGraphError(f"graph has {G.n_components} components")
    n_select = landmark_count(G.n_nodes, fraction)
    counts = throughput_counts(G, table, threads)
    ranked = np.lexsort((np.arange(G.n_nodes), -counts))
    return np.sort(ranked[:n_select])


def overlap(a: NeighborIndex, b: NeighborIndex, i: int) -> int:
    """Size of the intersection of sample ``i``'s neighbor lists in ``a`` and ``b``."""
    if a.k != b.k or a.count != b.count:
        raise ValueError(
            f"mismatched neighbor indices: k {a.k} vs {b.k}, count {a.count} vs {b.count}"
        )
    return len(set(a.lists[i].tolist()) & set(b.lists[i].tolist()))
