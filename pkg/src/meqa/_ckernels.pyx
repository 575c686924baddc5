# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Stiefel gradient ascent, Dijkstra, canonical
predecessors and shortest-path throughput counting.

Signatures mirror ``meqa._pykernels`` exactly; all loops run without the GIL.
"""

import numpy as np
from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free
from libc.stdint cimport int64_t

BACKEND = "cython"


cdef double _phi(const double[:, ::1] P, const double[:, ::1] M,
                 Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t r, j
    cdef double total = 0.0, c
    for j in range(m):
        c = 0.0
        for r in range(n):
            c = c + P[r, j] * M[r, j]
        total = total + c * c
    return total


cdef double _grad(const double[:, ::1] P, const double[:, ::1] M,
                  double[:, ::1] G, double[:, ::1] S,
                  Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    # G = 2 M diag(P^T M), then G -= P sym(P^T G); returns ||G||_F.
    cdef Py_ssize_t r, j, a
    cdef double c, acc, norm2 = 0.0
    for j in range(m):
        c = 0.0
        for r in range(n):
            c = c + P[r, j] * M[r, j]
        for r in range(n):
            G[r, j] = 2.0 * c * M[r, j]
    for a in range(m):
        for j in range(m):
            acc = 0.0
            for r in range(n):
                acc = acc + P[r, a] * G[r, j]
            S[a, j] = acc
    for r in range(n):
        for j in range(m):
            acc = 0.0
            for a in range(m):
                acc = acc + P[r, a] * 0.5 * (S[a, j] + S[j, a])
            G[r, j] = G[r, j] - acc
    for r in range(n):
        for j in range(m):
            norm2 = norm2 + G[r, j] * G[r, j]
    return sqrt(norm2)


cdef int _retract(double[:, ::1] Q, Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    # Thin QR orthonormal factor with positive R diagonal (Gram-Schmidt, two passes).
    cdef Py_ssize_t r, i, j, sweep
    cdef double dot, norm
    for j in range(m):
        for sweep in range(2):
            for i in range(j):
                dot = 0.0
                for r in range(n):
                    dot = dot + Q[r, i] * Q[r, j]
                for r in range(n):
                    Q[r, j] = Q[r, j] - dot * Q[r, i]
        norm = 0.0
        for r in range(n):
            norm = norm + Q[r, j] * Q[r, j]
        norm = sqrt(norm)
        if norm == 0.0:
            return -1
        for r in range(n):
            Q[r, j] = Q[r, j] / norm
    return 0


def stiefel_ascent(M, P0, double alpha, double tol, int64_t max_iter, int64_t max_halvings,
                   double sufficient_increase=0.0):
    """Maximize sum_j (p_j . m_j)^2 over orthonormal P by retracted ascent.

    A trial step is accepted when phi gains at least
    ``sufficient_increase * step * ||grad||^2``; otherwise it is halved.
    Returns ``(P, iterations, gradient_norm, phi, converged)``.
    """
    cdef double[:, ::1] Mv = np.ascontiguousarray(M, dtype=np.float64)
    P_arr = np.array(P0, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] P = P_arr
    cdef Py_ssize_t n = P.shape[0], m = P.shape[1]
    if Mv.shape[0] != n or Mv.shape[1] != m:
        raise ValueError("M and P0 must have the same shape")
    cdef double[:, ::1] G = np.zeros((n, m))
    cdef double[:, ::1] S = np.zeros((m, m))
    cdef double[:, ::1] Q = np.zeros((n, m))
    cdef double phi, phi_new, gnorm, step
    cdef int64_t it = 0, h
    cdef bint accepted, converged
    cdef Py_ssize_t r, j
    with nogil:
        phi = _phi(P, Mv, n, m)
        gnorm = _grad(P, Mv, G, S, n, m)
        converged = gnorm < tol
        while not converged and it < max_iter:
            step = alpha
            accepted = False
            for h in range(max_halvings + 1):
                for r in range(n):
                    for j in range(m):
                        Q[r, j] = P[r, j] + step * G[r, j]
                if _retract(Q, n, m) == 0:
                    phi_new = _phi(Q, Mv, n, m)
                    if phi_new >= phi + sufficient_increase * step * gnorm * gnorm:
                        accepted = True
                        break
                step = 0.5 * step
            if not accepted:
                break
            for r in range(n):
                for j in range(m):
                    P[r, j] = Q[r, j]
            phi = phi_new
            it = it + 1
            gnorm = _grad(P, Mv, G, S, n, m)
            converged = gnorm < tol
    return P_arr, int(it), float(gnorm), float(phi), bool(converged)


cdef struct HeapItem:
    double key
    int64_t node


cdef inline void _heap_push(HeapItem* heap, int64_t* size, double key, int64_t node) noexcept nogil:
    cdef int64_t i = size[0]
    cdef int64_t parent
    size[0] = i + 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent].key < key or (heap[parent].key == key and heap[parent].node <= node):
            break
        heap[i] = heap[parent]
        i = parent
    heap[i].key = key
    heap[i].node = node


cdef inline HeapItem _heap_pop(HeapItem* heap, int64_t* size) noexcept nogil:
    cdef HeapItem top = heap[0]
    cdef HeapItem last
    cdef int64_t n, i, child
    size[0] = size[0] - 1
    n = size[0]
    if n > 0:
        last = heap[n]
        i = 0
        while True:
            child = 2 * i + 1
            if child >= n:
                break
            if child + 1 < n and (heap[child + 1].key < heap[child].key or
                                  (heap[child + 1].key == heap[child].key and
                                   heap[child + 1].node < heap[child].node)):
                child = child + 1
            if last.key < heap[child].key or (last.key == heap[child].key and last.node <= heap[child].node):
                break
            heap[i] = heap[child]
            i = child
        heap[i] = last
    return top


def dijkstra_rows(indptr, indices, weights, sources):
    """Shortest-path lengths from each source; ``inf`` marks unreachable nodes."""
    cdef const int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const int64_t[::1] src = np.ascontiguousarray(sources, dtype=np.int64)
    cdef Py_ssize_t N = ip.shape[0] - 1
    cdef Py_ssize_t S_count = src.shape[0]
    out = np.full((S_count, N), np.inf)
    cdef double[:, ::1] dist = out
    cdef int64_t nnz = ix.shape[0]
    cdef HeapItem* heap = <HeapItem*> malloc((nnz + 1) * sizeof(HeapItem))
    cdef char* done = <char*> malloc(N * sizeof(char) if N > 0 else 1)
    if heap == NULL or done == NULL:
        free(heap)
        free(done)
        raise MemoryError()
    cdef int64_t size, u, v, e
    cdef Py_ssize_t row, i
    cdef double nd
    cdef HeapItem item
    try:
        with nogil:
            for row in range(S_count):
                for i in range(N):
                    done[i] = 0
                size = 0
                dist[row, src[row]] = 0.0
                _heap_push(heap, &size, 0.0, src[row])
                while size > 0:
                    item = _heap_pop(heap, &size)
                    u = item.node
                    if done[u]:
                        continue
                    done[u] = 1
                    for e in range(ip[u], ip[u + 1]):
                        v = ix[e]
                        if done[v]:
                            continue
                        nd = item.key + w[e]
                        if nd < dist[row, v]:
                            dist[row, v] = nd
                            _heap_push(heap, &size, nd, v)
    finally:
        free(heap)
        free(done)
    return out


def canonical_predecessors(indptr, indices, weights, dist, sources, double tol):
    """Smallest-index predecessor among tight edges, per source row.

    ``pred[row, v]`` is the smallest ``u`` with an edge ``u -> v`` such that
    ``|dist[u] + w(u, v) - dist[v]| <= tol``; ``-1`` for the source itself and
    for unreachable nodes.
    """
    cdef const int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, ::1] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef const int64_t[::1] src = np.ascontiguousarray(sources, dtype=np.int64)
    cdef Py_ssize_t N = ip.shape[0] - 1
    cdef Py_ssize_t S_count = src.shape[0]
    out = np.full((S_count, N), -1, dtype=np.int64)
    cdef int64_t[:, ::1] pred = out
    cdef Py_ssize_t row
    cdef int64_t u, v, e, s
    cdef double du
    with nogil:
        for row in range(S_count):
            s = src[row]
            for u in range(N):
                du = d[row, u]
                if du == INFINITY:
                    continue
                for e in range(ip[u], ip[u + 1]):
                    v = ix[e]
                    if v == s or w[e] <= tol or pred[row, v] >= 0:
                        continue
                    if fabs(du + w[e] - d[row, v]) <= tol:
                        pred[row, v] = u
    return out


def interior_counts(pred, order, sources):
    """Count, per node, the canonical paths s -> t (t > s) it lies strictly inside.

    ``order[row]`` lists nodes by nondecreasing distance from ``sources[row]``.
    """
    cdef const int64_t[:, ::1] p = np.ascontiguousarray(pred, dtype=np.int64)
    cdef const int64_t[:, ::1] o = np.ascontiguousarray(order, dtype=np.int64)
    cdef const int64_t[::1] src = np.ascontiguousarray(sources, dtype=np.int64)
    cdef Py_ssize_t S_count = p.shape[0], N = p.shape[1]
    counts_arr = np.zeros(N, dtype=np.int64)
    sub_arr = np.zeros(N, dtype=np.int64)
    cdef int64_t[::1] counts = counts_arr
    cdef int64_t[::1] sub = sub_arr
    cdef Py_ssize_t row, idx
    cdef int64_t s, v, parent
    with nogil:
        for row in range(S_count):
            s = src[row]
            for v in range(N):
                sub[v] = 0
            for idx in range(N - 1, -1, -1):
                v = o[row, idx]
                if v == s:
                    continue
                parent = p[row, v]
                if parent < 0:
                    continue
                sub[parent] = sub[parent] + sub[v] + (1 if v > s else 0)
            for v in range(N):
                if v != s:
                    counts[v] = counts[v] + sub[v]
    return counts_arr
