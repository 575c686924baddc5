"""Synthetic manifolds, whitening and reference embedders for fixtures.

Random numbers come from numpy's ``PCG64`` bit generator
(``numpy.random.default_rng(seed)``). Each generator draws, in order, all
first intrinsic coordinates of a batch and then all second coordinates, via
``Generator.uniform``; the Swisshole variant repeats batches of ``N`` draws
and keeps the points outside the hole, in draw order, until ``N`` are kept.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .asim import RankDeficiencyWarning, _centered, _principal_frame
from .datamodel import DataMatrix, as_matrix
from .neighbors import connected_graph, shortest_paths
from .nieqa import classical_mds

__all__ = [
    "ManifoldSample",
    "SWISSROLL_U1",
    "SWISSROLL_U2",
    "SWISSHOLE_U1",
    "SWISSHOLE_U2",
    "swissroll_map",
    "gaussian_map",
    "gen_swissroll",
    "gen_gaussian",
    "gen_rectangle",
    "generate",
    "add_noise",
    "whiten",
    "embed_pca",
    "embed_geodesic_mds",
]

SWISSROLL_U1 = (1.5 * math.pi, 4.5 * math.pi)
SWISSROLL_U2 = (0.0, 21.0)
# hole: central third of each parameter range
SWISSHOLE_U1 = (
    SWISSROLL_U1[0] + (SWISSROLL_U1[1] - SWISSROLL_U1[0]) / 3,
    SWISSROLL_U1[0] + 2 * (SWISSROLL_U1[1] - SWISSROLL_U1[0]) / 3,
)
SWISSHOLE_U2 = (7.0, 14.0)
GAUSSIAN_RANGE = (-3.0, 3.0)
RECTANGLE_U1 = (-2.0, 2.0)
RECTANGLE_U2 = (-1.0, 1.0)


@dataclass(frozen=True, eq=False)
class ManifoldSample:
    X: DataMatrix
    U: DataMatrix
    seed: int
    name: str


def _check_n(N):
    if N < 10:
        raise ValueError(f"N must be >= 10, got {N}")


def swissroll_map(U) -> np.ndarray:
    u1, u2 = np.asarray(U, dtype=np.float64)
    return np.vstack([u1 * np.cos(u1), u2, u1 * np.sin(u1)])


def gaussian_map(U) -> np.ndarray:
    u1, u2 = np.asarray(U, dtype=np.float64)
    return np.vstack([u1, u2, np.exp(-(u1 ** 2 + u2 ** 2) / 2) / (2 * math.pi)])


def in_hole(U) -> np.ndarray:
    u1, u2 = np.asarray(U, dtype=np.float64)
    return ((u1 >= SWISSHOLE_U1[0]) & (u1 <= SWISSHOLE_U1[1])
            & (u2 >= SWISSHOLE_U2[0]) & (u2 <= SWISSHOLE_U2[1]))


def gen_swissroll(N: int = 1000, seed: int = 0, hole: bool = False) -> ManifoldSample:
    _check_n(N)
    rng = np.random.default_rng(seed)
    kept = np.empty((2, 0))
    while kept.shape[1] < N:
        u1 = rng.uniform(*SWISSROLL_U1, size=N)
        u2 = rng.uniform(*SWISSROLL_U2, size=N)
        batch = np.vstack([u1, u2])
        if hole:
            batch = batch[:, ~in_hole(batch)]
        kept = np.hstack([kept, batch])
    U = kept[:, :N]
    return ManifoldSample(DataMatrix(swissroll_map(U)), DataMatrix(U), seed,
                          "swisshole" if hole else "swissroll")


def gen_gaussian(N: int = 1000, seed: int = 0) -> ManifoldSample:
    _check_n(N)
    rng = np.random.default_rng(seed)
    U = np.vstack([rng.uniform(*GAUSSIAN_RANGE, size=N), rng.uniform(*GAUSSIAN_RANGE, size=N)])
    return ManifoldSample(DataMatrix(gaussian_map(U)), DataMatrix(U), seed, "gaussian")


def gen_rectangle(N: int = 100, seed: int = 0) -> ManifoldSample:
    """Uniform points on ``[-2, 2] x [-1, 1]``; ``X`` equals ``U``."""
    _check_n(N)
    rng = np.random.default_rng(seed)
    U = np.vstack([rng.uniform(*RECTANGLE_U1, size=N), rng.uniform(*RECTANGLE_U2, size=N)])
    return ManifoldSample(DataMatrix(U), DataMatrix(U), seed, "rectangle")


GENERATORS = {
    "swissroll": lambda N, seed: gen_swissroll(N, seed, hole=False),
    "swisshole": lambda N, seed: gen_swissroll(N, seed, hole=True),
    "gaussian": gen_gaussian,
    "rectangle": gen_rectangle,
}


def generate(name: str, N: int, seed: int = 0) -> ManifoldSample:
    try:
        return GENERATORS[name](N, seed)
    except KeyError:
        raise ValueError(f"unknown manifold {name!r}; choose from {sorted(GENERATORS)}") from None


def add_noise(X, sigma: float, seed: int = 0) -> np.ndarray:
    """Additive isotropic Gaussian noise (own stream, independent of the sample draw)."""
    X = as_matrix(X, "X")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return X.copy()
    rng = np.random.default_rng([seed, 1])
    return X + sigma * rng.standard_normal(X.shape)


def whiten(Y, method: str = "symmetric") -> np.ndarray:
    """Linear normalization to ``W W^T = I`` after centering.

    ``symmetric`` applies ``(Yc Yc^T)^(-1/2)`` and is idempotent. ``pca``
    returns ``Lambda^(-1/2) Q^T Yc`` (principal axes, descending variance),
    for which ``Yc = Q Lambda^(1/2) W`` is exactly a rotation times a
    diagonal scaling.
    """
    Y = as_matrix(Y, "Y")
    Yc = _centered(Y)
    evals, Q = np.linalg.eigh(Yc @ Yc.T)
    if evals[0] <= 1e-12 * max(evals[-1], 0.0) or evals[-1] <= 0:
        raise np.linalg.LinAlgError("covariance is singular; cannot whiten")
    if method == "symmetric":
        return (Q / np.sqrt(evals)) @ Q.T @ Yc
    if method == "pca":
        evals, Q = evals[::-1], Q[:, ::-1]
        lead = Q[np.argmax(np.abs(Q), axis=0), np.arange(Q.shape[1])]
        Q = Q * np.sign(lead)
        return (Q.T @ Yc) / np.sqrt(evals)[:, None]
    raise ValueError(f"unknown whitening method {method!r}")


def embed_pca(X, m: int) -> np.ndarray:
    """Top-``m`` principal coordinates of the centered data (``m x N``)."""
    X = as_matrix(X, "X")
    if not 1 <= m <= X.shape[0]:
        raise ValueError(f"m must lie in [1, {X.shape[0]}], got {m}")
    _, coords, rank = _principal_frame(_centered(X), m)
    if rank < m:
        warnings.warn(f"data rank {rank} < {m}; trailing coordinates are zero",
                      RankDeficiencyWarning, stacklevel=2)
    return coords


def embed_geodesic_mds(X, m: int, k: int, threads=None) -> np.ndarray:
    """ISOMAP-style fixture: kNN-graph geodesics fed to classical MDS.

    The graph is escalated to the smallest connecting ``k`` if needed.
    """
    X = as_matrix(X, "X")
    graph, _ = connected_graph(X, k)
    table = shortest_paths(graph, np.arange(X.shape[1]), predecessors=False, threads=threads)
    D = table.distances
    return classical_mds(0.5 * (D + D.T), m)
