"""Pure-Python/numpy fallback for the compiled kernels in ``_ckernels.pyx``.

Same signatures and return conventions; selected automatically when the
extension is not built, or forced with ``MEQA_BACKEND=python``.
"""

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

BACKEND = "python"


def _phi(P, M):
    c = np.einsum("ij,ij->j", P, M)
    return float(c @ c)


def _grad(P, M):
    G = 2.0 * M * np.einsum("ij,ij->j", P, M)
    S = P.T @ G
    G = G - P @ (0.5 * (S + S.T))
    return G, float(np.sqrt(np.sum(G * G)))


def _retract(Q):
    q, r = np.linalg.qr(Q)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs


def stiefel_ascent(M, P0, alpha, tol, max_iter, max_halvings, sufficient_increase=0.0):
    M = np.ascontiguousarray(M, dtype=np.float64)
    P = np.array(P0, dtype=np.float64, copy=True)
    if M.shape != P.shape:
        raise ValueError("M and P0 must have the same shape")
    phi = _phi(P, M)
    G, gnorm = _grad(P, M)
    it = 0
    converged = gnorm < tol
    while not converged and it < max_iter:
        step = alpha
        for _ in range(max_halvings + 1):
            Q = _retract(P + step * G)
            phi_new = _phi(Q, M)
            if phi_new >= phi + sufficient_increase * step * gnorm * gnorm:
                break
            step *= 0.5
        else:
            break
        P, phi = Q, phi_new
        it += 1
        G, gnorm = _grad(P, M)
        converged = gnorm < tol
    return P, it, gnorm, phi, converged


def _csr(indptr, indices, weights):
    n = len(indptr) - 1
    return csr_matrix((np.asarray(weights, dtype=np.float64),
                       np.asarray(indices), np.asarray(indptr)), shape=(n, n))


def dijkstra_rows(indptr, indices, weights, sources):
    sources = np.asarray(sources, dtype=np.int64)
    graph = _csr(indptr, indices, weights)
    out = dijkstra(graph, directed=True, indices=sources)
    return np.atleast_2d(out)


def canonical_predecessors(indptr, indices, weights, dist, sources, tol):
    indptr = np.asarray(indptr, dtype=np.int64)
    heads = np.asarray(indices, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    dist = np.atleast_2d(np.asarray(dist, dtype=np.float64))
    n = len(indptr) - 1
    tails = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    usable = weights > tol
    tails, heads, weights = tails[usable], heads[usable], weights[usable]
    out = np.full((len(sources), n), -1, dtype=np.int64)
    for row, s in enumerate(np.asarray(sources, dtype=np.int64)):
        d = dist[row]
        with np.errstate(invalid="ignore"):
            tight = np.abs(d[tails] + weights - d[heads]) <= tol
        tight &= np.isfinite(d[tails]) & (heads != s)
        best = np.full(n, n, dtype=np.int64)
        np.minimum.at(best, heads[tight], tails[tight])
        out[row] = np.where(best < n, best, -1)
    return out


def interior_counts(pred, order, sources):
    pred = np.asarray(pred, dtype=np.int64)
    order = np.asarray(order, dtype=np.int64)
    n = pred.shape[1]
    counts = np.zeros(n, dtype=np.int64)
    for row, s in enumerate(np.asarray(sources, dtype=np.int64).tolist()):
        p = pred[row].tolist()
        sub = [0] * n
        for v in reversed(order[row].tolist()):
            if v == s:
                continue
            parent = p[v]
            if parent < 0:
                continue
            sub[parent] += sub[v] + (v > s)
        sub[s] = 0
        counts += np.asarray(sub, dtype=np.int64)
    return counts
