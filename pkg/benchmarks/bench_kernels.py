"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--n 1000] [--repeat 3]

Times the three hot paths on the Swissroll fixture: the per-neighborhood
Stiefel ascent (one local score), all-source shortest paths with canonical
predecessors, and path-throughput counting.
"""

import argparse
import time

import numpy as np

from meqa import _pykernels
from meqa.asim import AsimOptions, alignment_target
from meqa.neighbors import TIE_TOL, connected_graph
from meqa.nieqa import neighborhoods
from meqa.synthgen import gen_swissroll

try:
    from meqa import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def ascent_problems(X, U, k):
    problems = []
    for row in neighborhoods(X, k):
        Xc = X[:, row] - X[:, row].mean(axis=1, keepdims=True)
        Yc = U[:, row] - U[:, row].mean(axis=1, keepdims=True)
        M = alignment_target(Xc, Yc)
        M /= np.linalg.norm(M)
        u, _, vt = np.linalg.svd(Xc @ Yc.T, full_matrices=False)
        problems.append((M, u @ vt))
    return problems


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000, help="Swissroll sample count")
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    s = gen_swissroll(args.n, seed=0)
    X, U = s.X.values, s.U.values
    problems = ascent_problems(X, U, args.k)
    G, _ = connected_graph(X, args.k)
    src = np.arange(G.n_nodes, dtype=np.int64)
    o = AsimOptions()

    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    rows = []
    for name, mod in backends:
        def ascent():
            return [mod.stiefel_ascent(M, P0, o.alpha, o.tol, o.max_iter, o.max_halvings,
                                       o.sufficient_increase)[3] for M, P0 in problems]

        def paths():
            d = mod.dijkstra_rows(G.indptr, G.indices, G.weights, src)
            return d, mod.canonical_predecessors(G.indptr, G.indices, G.weights, d, src, TIE_TOL)

        t_asc, phis = best_of(ascent, args.repeat)
        t_sp, (d, p) = best_of(paths, args.repeat)
        order = np.argsort(d, axis=1, kind="stable")
        t_cnt, counts = best_of(lambda: mod.interior_counts(p, order, src), args.repeat)
        rows.append((name, t_asc, t_sp, t_cnt, np.asarray(phis), counts))

    print(f"N={args.n} k={args.k}  best of {args.repeat} (seconds)")
    print(f"{'backend':<8}{'ascent':>10}{'paths':>10}{'counts':>10}")
    for name, a, b, c, _, _ in rows:
        print(f"{name:<8}{a:>10.3f}{b:>10.3f}{c:>10.3f}")
    if len(rows) == 2:
        (_, a0, b0, c0, phi0, n0), (_, a1, b1, c1, phi1, n1) = rows
        print(f"{'speedup':<8}{a0 / a1:>9.1f}x{b0 / b1:>9.1f}x{c0 / c1:>9.1f}x")
        print(f"max |phi| difference {np.abs(phi0 - phi1).max():.1e}; "
              f"counts identical: {np.array_equal(n0, n1)}")


if __name__ == "__main__":
    main()
