"""Comparison measures: Procrustes (plain and scaled), LCMC, residual
variance, and ground-truth matching degree.

All of them are oriented so that 0 means a perfect embedding, except
:func:`measure_LC`, which returns the raw overlap fraction (report
``1 - M_LC``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from ._backend import run_chunks
from .asim import AsimOptions, asim
from .datamodel import PairedDataset, as_matrix
from .neighbors import connected_graph, knn, shortest_paths
from .nieqa import neighborhoods

__all__ = [
    "MEASURE_NAMES",
    "MeasureValue",
    "ProcrustesFit",
    "procrustes_fit",
    "procrustes_local",
    "measure_MP",
    "measure_LC",
    "measure_RV",
    "measure_Mt",
]

MEASURE_NAMES = ("MP", "MPc", "oneMinusLC", "RV", "Mt", "ML", "MG")


@dataclass(frozen=True)
class MeasureValue:
    name: str
    value: float
    details: dict | None = None

    def __post_init__(self):
        if self.name not in MEASURE_NAMES:
            raise ValueError(f"unknown measure {self.name!r}")
        tol = 1e-12
        v = self.value
        if self.name in ("oneMinusLC", "RV") and not -tol <= v <= 1 + tol:
            raise ValueError(f"{self.name} must lie in [0, 1], got {v}")
        if self.name in ("MP", "MPc", "Mt", "ML", "MG") and v < -tol:
            raise ValueError(f"{self.name} must be nonnegative, got {v}")


@dataclass(frozen=True, eq=False)
class ProcrustesFit:
    R: np.ndarray
    scale: float
    b: np.ndarray
    residual: float


def procrustes_fit(X, Y, allow_scale: bool = False) -> ProcrustesFit:
    """Orthogonal Procrustes fit of ``Y`` onto ``X`` (reflections allowed).

    With ``allow_scale`` one global factor ``s = trace(Sigma) / ||Yc||^2`` is
    fitted as well; otherwise ``s = 1``.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError("X and Y must have the same number of columns")
    if Y.shape[0] > X.shape[0]:
        raise ValueError("Y dimension exceeds X dimension")
    Xc = X - X.mean(axis=1, keepdims=True)
    Yc = Y - Y.mean(axis=1, keepdims=True)
    U, sv, Vt = np.linalg.svd(Xc @ Yc.T, full_matrices=False)
    R = U @ Vt
    if allow_scale:
        y_energy = float(np.sum(Yc * Yc))
        s = float(sv.sum()) / y_energy if y_energy > 0 else 0.0
    else:
        s = 1.0
    E = Xc - s * R @ Yc
    b = (X - s * R @ Y).mean(axis=1)
    return ProcrustesFit(R, s, b, float(np.sum(E * E)))


def procrustes_local(X, Y, allow_scale: bool = False) -> float:
    """``sum_j ||x_j - s R y_j - b||^2`` at the optimal ``R``, ``b`` (and ``s``)."""
    return procrustes_fit(X, Y, allow_scale).residual


def measure_MP(X, Y, k: int = 10, allow_scale: bool = False, threads=None) -> float:
    """Mean Procrustes residual over neighborhoods, each divided by its centered energy.

    ``allow_scale=True`` gives the globally-scaled variant.
    """
    pair = PairedDataset(X, Y)
    X, Y = pair.high.values, pair.low.values
    idx = neighborhoods(X, k)

    def work(chunk):
        out = np.zeros(len(chunk))
        for slot, i in enumerate(chunk):
            Xi = X[:, idx[i]]
            energy = float(np.sum((Xi - Xi.mean(axis=1, keepdims=True)) ** 2))
            if energy > 0:
                out[slot] = procrustes_local(Xi, Y[:, idx[i]], allow_scale) / energy
        return out

    return float(np.mean(np.concatenate(run_chunks(work, X.shape[1], threads))))


def lc_overlaps(X, Y, k: int = 10) -> np.ndarray:
    """Per-sample overlap counts ``|N_k(x_i) & N_k(y_i)|``."""
    pair = PairedDataset(X, Y)
    a = knn(pair.high, k)
    b = knn(pair.low, k)
    return np.array([np.intersect1d(a.lists[i], b.lists[i]).size for i in range(a.count)])


def measure_LC(X, Y, k: int = 10) -> float:
    """Mean fractional kNN overlap ``M_LC`` in ``(0, 1]`` (higher is better)."""
    return float(lc_overlaps(X, Y, k).sum()) / (k * as_matrix(X).shape[1])


def measure_RV(X, Y, k: int = 10, threads=None, info: dict | None = None) -> float:
    """Residual variance ``1 - rho^2`` between graph geodesics in ``X`` and
    Euclidean distances in ``Y``.

    The graph is escalated to the smallest connecting ``k`` when needed;
    pass a dict as ``info`` to receive the ``k`` actually used.
    """
    pair = PairedDataset(X, Y)
    graph, escalated = connected_graph(pair.high.values, k)
    if info is not None:
        info.update(k=graph.k, escalated=escalated)
    n = pair.high.count
    G = shortest_paths(graph, np.arange(n), predecessors=False, threads=threads).distances
    iu = np.triu_indices(n, 1)
    g = 0.5 * (G[iu] + G.T[iu])
    d = pdist(pair.low.values.T)
    if np.std(g) == 0 or np.std(d) == 0:
        raise ValueError("zero variance in a distance vector; correlation undefined")
    rho = np.corrcoef(g, d)[0, 1]
    return float(min(1.0, max(0.0, 1.0 - rho * rho)))


def measure_Mt(Y, U, opts: AsimOptions | None = None) -> float:
    """Ground-truth matching degree: the alignment residual of ``U`` onto ``Y``
    with the whole set treated as one patch."""
    Y = as_matrix(Y, "Y")
    U = as_matrix(U, "U")
    if Y.shape != U.shape:
        raise ValueError(f"Y {Y.shape} and U {U.shape} must have the same shape")
    return asim(Y, U, opts).residual
