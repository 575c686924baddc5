"""Independent brute-force reference implementations used only by the tests.

Nothing here imports the package's numerical code; each routine recomputes a
quantity from its definition with plain loops.
"""

import math

import numpy as np


def brute_knn(points, k):
    """points: list of tuples. Lists sorted by (distance, index)."""
    out = []
    for i, p in enumerate(points):
        cand = sorted(
            (math.dist(p, q), j) for j, q in enumerate(points) if j != i
        )
        out.append([j for _, j in cand[:k]])
    return out


def columns(M):
    M = np.asarray(M, dtype=float)
    return [tuple(M[:, j]) for j in range(M.shape[1])]


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def n_components(self):
        return len({self.find(a) for a in range(len(self.parent))})


def knn_components(points, k):
    uf = UnionFind(len(points))
    for i, nbrs in enumerate(brute_knn(points, k)):
        for j in nbrs:
            if math.dist(points[i], points[j]) > 0:
                uf.union(i, j)
    return uf.n_components()


def floyd_warshall(n, edges):
    """edges: dict {(i, j): w} undirected."""
    d = [[math.inf] * n for _ in range(n)]
    for i in range(n):
        d[i][i] = 0.0
    for (i, j), w in edges.items():
        d[i][j] = min(d[i][j], w)
        d[j][i] = min(d[j][i], w)
    for m in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][m] + d[m][j] < d[i][j]:
                    d[i][j] = d[i][m] + d[m][j]
    return d


def canonical_path(d, edges, s, t, tol=1e-12):
    """Walk back from t choosing the smallest tight predecessor at each step."""
    adj = {}
    for (i, j), w in edges.items():
        adj.setdefault(j, []).append((i, w))
        adj.setdefault(i, []).append((j, w))
    path = [t]
    v = t
    while v != s:
        v = min(u for u, w in adj[v] if abs(d[s][u] + w - d[s][v]) <= tol)
        path.append(v)
    return path[::-1]


def path_walk_throughput(n, edges, tol=1e-12):
    """Interior-node counts over canonical paths of every pair s < t."""
    d = floyd_warshall(n, edges)
    counts = [0] * n
    for s in range(n):
        for t in range(s + 1, n):
            for v in canonical_path(d, edges, s, t, tol)[1:-1]:
                counts[v] += 1
    return counts


def scalar_phi(P, M):
    n, m = len(P), len(P[0])
    total = 0.0
    for j in range(m):
        c = 0.0
        for r in range(n):
            c += P[r][j] * M[r][j]
        total += c * c
    return total


def alignment_residual(X, Y, P):
    """Residual of the best D and t for a fixed frame P, by scalar loops."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, k = X.shape
    m = Y.shape[0]
    xm = [sum(X[r, c] for c in range(k)) / k for r in range(n)]
    ym = [sum(Y[r, c] for c in range(k)) / k for r in range(m)]
    Xc = [[X[r, c] - xm[r] for c in range(k)] for r in range(n)]
    Yc = [[Y[r, c] - ym[r] for c in range(k)] for r in range(m)]
    PtX = [[sum(P[r][j] * Xc[r][c] for r in range(n)) for c in range(k)] for j in range(m)]
    num = sum(Xc[r][c] ** 2 for r in range(n) for c in range(k))
    resid = num
    for j in range(m):
        a = sum(Yc[j][c] ** 2 for c in range(k))
        if a <= 1e-12 * sum(Yc[i][c] ** 2 for i in range(m) for c in range(k)):
            continue
        b = sum(PtX[j][c] * Yc[j][c] for c in range(k))
        resid -= b * b / a
    return max(resid, 0.0) / num


def random_frame(rng, n, m):
    q, r = np.linalg.qr(rng.standard_normal((n, m)))
    return q * np.sign(np.diag(r))


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])
