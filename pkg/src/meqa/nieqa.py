"""Local and global normalization-independent embedding quality scores.

The local score averages the alignment residual of every neighborhood
``[x_i, kNN(x_i)]`` against the same columns of the embedding. The global
score aligns the embedding's landmark points onto a classical-MDS layout of
the landmarks' graph geodesics. Lower is better for both.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import run_chunks
from .asim import AsimOptions, DegenerateInputError, RankDeficiencyWarning, asim
from .datamodel import PairedDataset, as_matrix
from .neighbors import (
    connected_graph,
    knn,
    landmark_select,
    shortest_paths,
)

__all__ = [
    "NONCONVEX_CAVEAT",
    "NieqaReport",
    "GlobalReference",
    "RankedCandidate",
    "neighborhoods",
    "local_assessment",
    "classical_mds",
    "default_k_l",
    "global_reference",
    "global_assessment",
    "model_select",
]

log = logging.getLogger(__name__)

NONCONVEX_CAVEAT = (
    "global score is unreliable on geodesically non-convex manifolds: graph "
    "shortest paths detour around holes and overestimate geodesic distances"
)


@dataclass(frozen=True, eq=False)
class NieqaReport:
    local_score: float | None = None
    per_neighborhood: np.ndarray | None = None
    global_score: float | None = None
    landmarks: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def neighborhoods(X, k: int) -> np.ndarray:
    """Row ``i`` is ``[i, kNN(i)...]``, neighbors taken in the input space."""
    index = knn(X, k)
    return np.hstack([np.arange(index.count)[:, None], index.lists])


def local_assessment(X, Y, k: int = 10, opts: AsimOptions | None = None, threads=None) -> NieqaReport:
    """Mean neighborhood alignment residual of ``Y`` against ``X``.

    A neighborhood whose input samples all coincide contributes 0 and is
    counted under ``diagnostics["degenerate"]``.
    """
    pair = PairedDataset(X, Y)
    X, Y = pair.high.values, pair.low.values
    opts = opts or AsimOptions()
    idx = neighborhoods(X, k)
    n_samples = X.shape[1]

    def work(chunk):
        out = np.zeros(len(chunk))
        degenerate = non_converged = 0
        for slot, i in enumerate(chunk):
            cols = idx[i]
            try:
                res = asim(X[:, cols], Y[:, cols], opts)
            except DegenerateInputError:
                degenerate += 1
                continue
            out[slot] = res.residual
            non_converged += not res.converged
        return out, degenerate, non_converged

    parts = run_chunks(work, n_samples, threads)
    per = np.concatenate([p[0] for p in parts])
    degenerate = sum(p[1] for p in parts)
    non_converged = sum(p[2] for p in parts)
    diagnostics = {"k": k, "degenerate": degenerate, "non_converged": non_converged}
    if degenerate:
        log.warning("%d neighborhoods have no spread and were scored 0", degenerate)
    return NieqaReport(local_score=float(np.mean(per)), per_neighborhood=per, diagnostics=diagnostics)


def classical_mds(D, m: int, return_eigenvalues: bool = False):
    """Classical MDS of a distance matrix; returns an ``m x l`` coordinate array.

    Eigenvalues are taken in descending order. Directions with non-positive
    (or numerically zero) eigenvalues get zero coordinates, with a
    :class:`RankDeficiencyWarning` when that affects the requested ``m``.
    Each eigenvector's largest-magnitude entry is made positive.
    """
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValueError("distance matrix has non-finite entries")
    scale = max(float(np.abs(D).max()), 1.0)
    if not np.allclose(D, D.T, rtol=0, atol=1e-9 * scale):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.abs(np.diag(D)) > 1e-12 * scale) or np.any(D < 0):
        raise ValueError("distance matrix needs a zero diagonal and nonnegative entries")
    l = D.shape[0]
    if not 1 <= m <= l:
        raise ValueError(f"m must lie in [1, {l}], got {m}")

    D2 = D * D
    B = -0.5 * (D2 - D2.mean(axis=0) - D2.mean(axis=1)[:, None] + D2.mean())
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], evecs[:, order]

    top = evals[:m]
    cutoff = 1e-12 * max(evals[0], 0.0)
    positive = top > cutoff
    vecs = evecs[:, :m]
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(m)]
    vecs = vecs * np.where(lead < 0, -1.0, 1.0)
    coords = (vecs * np.sqrt(np.where(positive, top, 0.0))).T
    if not positive.all():
        warnings.warn(
            f"only {int(positive.sum())} positive eigenvalues for {m} requested dimensions; "
            "padded with zeros",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return (coords, evals) if return_eigenvalues else coords


def default_k_l(n_samples: int) -> int:
    return max(1, min(n_samples - 1, int(np.ceil(0.1 * n_samples - 1e-9))))


@dataclass(frozen=True, eq=False)
class GlobalReference:
    """Landmarks of the input data and their geodesic-MDS layout."""

    k_l: int
    escalated: bool
    fraction: float
    landmarks: np.ndarray
    layout: np.ndarray


def global_reference(X, m: int, k_l=None, fraction: float = 0.10, threads=None) -> GlobalReference:
    """Landmark layout shared by every embedding of the same input data.

    ``k_l=None`` means ``ceil(0.1 N)``; a disconnected graph is escalated to
    the smallest connecting neighbor count.
    """
    X = as_matrix(X, "X")
    n_samples = X.shape[1]
    requested = default_k_l(n_samples) if k_l in (None, "auto") else int(k_l)
    graph, escalated = connected_graph(X, requested)
    table = shortest_paths(graph, np.arange(n_samples), threads=threads)
    landmarks = landmark_select(graph, fraction, table=table, threads=threads)
    G = table.distances[np.ix_(landmarks, landmarks)]
    layout = classical_mds(0.5 * (G + G.T), m)
    return GlobalReference(graph.k, escalated, fraction, landmarks, layout)


def global_assessment(X, Y, k_l=None, fraction: float = 0.10, opts: AsimOptions | None = None,
                      nonconvex: bool = False, threads=None,
                      reference: GlobalReference | None = None) -> NieqaReport:
    """Residual of aligning ``Y``'s landmark columns onto their geodesic-MDS layout."""
    pair = PairedDataset(X, Y)
    Y = pair.low.values
    if reference is None:
        reference = global_reference(pair.high.values, Y.shape[0], k_l, fraction, threads)
    score = asim(reference.layout, Y[:, reference.landmarks], opts or AsimOptions()).residual
    notes = []
    if reference.escalated:
        notes.append(f"k_l escalated to {reference.k_l} to connect the neighbor graph")
    if nonconvex:
        notes.append(NONCONVEX_CAVEAT)
    diagnostics = {"k_l": reference.k_l, "fraction": reference.fraction,
                   "landmark_count": int(reference.landmarks.size), "warnings": notes}
    return NieqaReport(global_score=score, landmarks=reference.landmarks, diagnostics=diagnostics)


@dataclass(frozen=True)
class RankedCandidate:
    label: object
    score: float
    local_score: float | None = None
    global_score: float | None = None


def model_select(X, candidates, mode: str = "local", weight: float = 0.5, k: int = 10,
                 k_l=None, fraction: float = 0.10, opts: AsimOptions | None = None,
                 threads=None) -> list[RankedCandidate]:
    """Rank candidate embeddings of ``X`` by ascending score.

    ``mode`` is ``local``, ``global`` or ``combined``; the combined score is
    ``weight * local + (1 - weight) * global``. Scores within 1e-12 of each
    other are treated as tied and ordered by label.
    """
    if mode not in ("local", "global", "combined"):
        raise ValueError(f"unknown mode {mode!r}")
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    X = as_matrix(X, "X")
    candidates = [(label, as_matrix(Y, f"candidate {label!r}")) for label, Y in candidates]
    if not candidates:
        raise ValueError("no candidates")
    for label, Y in candidates:
        if Y.shape[1] != X.shape[1]:
            raise ValueError(f"candidate {label!r} has {Y.shape[1]} samples, X has {X.shape[1]}")

    references = {}
    ranked = []
    for label, Y in candidates:
        local = glob = None
        if mode in ("local", "combined"):
            local = local_assessment(X, Y, k, opts, threads).local_score
        if mode in ("global", "combined"):
            m = Y.shape[0]
            if m not in references:
                references[m] = global_reference(X, m, k_l, fraction, threads)
            glob = global_assessment(X, Y, opts=opts, reference=references[m]).global_score
        if mode == "local":
            score = local
        elif mode == "global":
            score = glob
        else:
            score = weight * local + (1.0 - weight) * glob
        ranked.append(RankedCandidate(label, float(score), local, glob))
    return _rank(ranked)


def _rank(entries, tie_tol=1e-12):
    entries = sorted(entries, key=lambda e: e.score)
    out, group = [], []
    for e in entries:
        if group and e.score - group[-1].score >= tie_tol:
            out.extend(sorted(group, key=lambda g: g.label))
            group = []
        group.append(e)
    out.extend(sorted(group, key=lambda g: g.label))
    return out
