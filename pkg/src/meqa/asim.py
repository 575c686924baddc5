"""Anisotropic scaling independent alignment measure.

Aligns a point set ``Y`` (``m x k``) onto ``X`` (``n x k``) under the model
``x_j ~ P D y_j + t`` with ``P`` column-orthonormal, ``D`` diagonal and ``t`` a
translation, and reports the normalized residual

    ||Xc - P* D* Yc||_F^2 / ||Xc||_F^2

where ``Xc``, ``Yc`` are the row-centered matrices. Translation and scaling
have closed forms; ``P`` is found by Riemannian gradient ascent on the
Stiefel manifold with a QR retraction.

The measure is directional: it aligns ``Y`` onto ``X`` and normalizes by the
energy of ``X``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .datamodel import as_matrix

__all__ = [
    "DegenerateInputError",
    "RankDeficiencyWarning",
    "AsimOptions",
    "AlignmentResult",
    "StiefelResult",
    "optimal_translation",
    "optimal_scaling",
    "alignment_target",
    "phi",
    "euclidean_gradient",
    "riemannian_gradient",
    "qr_retract",
    "solve_stiefel",
    "tangent_project",
    "asim",
]

# relative threshold below which an embedding axis counts as flat
FLAT_AXIS_RTOL = 1e-12


class DegenerateInputError(ValueError):
    """Input without spread (all samples identical)."""


class RankDeficiencyWarning(UserWarning):
    """Fewer informative directions than requested; output was zero-padded."""


@dataclass(frozen=True)
class AsimOptions:
    """Optimizer settings.

    ``alpha`` is the trial step of each iteration. It is halved (up to
    ``max_halvings`` times) until the objective gains at least
    ``sufficient_increase * step * ||grad||^2``; ``sufficient_increase=0``
    only rejects steps that decrease it. ``tol`` is the stopping threshold on
    the Riemannian gradient norm. Step and tolerance act on the alignment
    target rescaled to unit Frobenius norm, so they do not depend on the
    data's units. ``seed`` drives the random-orthonormal initialization.
    """

    alpha: float = 8.0
    tol: float = 1e-6
    max_iter: int = 500
    init: str = "procrustes"
    tangent_threshold: int = 50
    max_halvings: int = 30
    sufficient_increase: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.init not in ("procrustes", "random"):
            raise ValueError(f"unknown init strategy {self.init!r}")
        if self.tangent_threshold < 1:
            raise ValueError("tangent_threshold must be >= 1")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be >= 0")
        if not 0.0 <= self.sufficient_increase < 1.0:
            raise ValueError("sufficient_increase must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class StiefelResult:
    P: np.ndarray
    iterations: int
    gradient_norm: float
    phi: float
    converged: bool


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    P: np.ndarray
    D: np.ndarray
    t: np.ndarray
    residual: float
    iterations: int
    gradient_norm: float
    converged: bool
    projected: bool = False
    rank_deficient: bool = False

    @property
    def scales(self) -> np.ndarray:
        return np.diag(self.D).copy()


def _centered(A):
    return A - A.mean(axis=1, keepdims=True)


def _check_frame(P, n, m):
    P = np.asarray(P, dtype=np.float64)
    if P.shape != (n, m):
        raise ValueError(f"P must be {n}x{m}, got {P.shape}")
    return P


def optimal_translation(X, Y, P, D) -> np.ndarray:
    """Best translation for fixed ``P``, ``D``: the mean column of ``X - P D Y``."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError("X and Y must have the same number of columns")
    n, m = X.shape[0], Y.shape[0]
    P = _check_frame(P, n, m)
    D = np.asarray(D, dtype=np.float64)
    if D.shape != (m, m):
        raise ValueError(f"D must be {m}x{m}, got {D.shape}")
    return (X - P @ D @ Y).mean(axis=1)


def _flat_axes(a):
    total = a.sum()
    return a <= FLAT_AXIS_RTOL * total if total > 0 else np.ones_like(a, dtype=bool)


def optimal_scaling(Xc, Yc, P) -> np.ndarray:
    """Best diagonal scaling for fixed ``P``: ``d_j = b_jj / a_jj``.

    ``A = Yc Yc^T`` and ``B = P^T Xc Yc^T``. Axes along which ``Yc`` is flat
    get ``d_j = 0``.
    """
    Xc = as_matrix(Xc, "Xc")
    Yc = as_matrix(Yc, "Yc")
    P = _check_frame(P, Xc.shape[0], Yc.shape[0])
    a = np.einsum("ij,ij->i", Yc, Yc)
    b = np.einsum("rj,rj->j", P, Xc @ Yc.T)
    flat = _flat_axes(a)
    d = np.zeros_like(a)
    d[~flat] = b[~flat] / a[~flat]
    return np.diag(d)


def alignment_target(Xc, Yc) -> np.ndarray:
    """``M = Xc Yc^T diag(A)^(-1/2)`` with columns of flat axes zeroed."""
    a = np.einsum("ij,ij->i", Yc, Yc)
    flat = _flat_axes(a)
    M = Xc @ Yc.T
    scale = np.zeros_like(a)
    scale[~flat] = 1.0 / np.sqrt(a[~flat])
    return M * scale


def phi(P, M) -> float:
    """``sum_j (p_j . m_j)^2``, the quantity maximized over orthonormal ``P``."""
    P = np.asarray(P, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if P.shape != M.shape:
        raise ValueError(f"P {P.shape} and M {M.shape} must have the same shape")
    c = np.einsum("ij,ij->j", P, M)
    return float(c @ c)


def euclidean_gradient(P, M) -> np.ndarray:
    """Ambient gradient ``2 M diag(P^T M)``."""
    P = np.asarray(P, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if P.shape != M.shape:
        raise ValueError(f"P {P.shape} and M {M.shape} must have the same shape")
    return 2.0 * M * np.einsum("ij,ij->j", P, M)


def riemannian_gradient(P, M) -> np.ndarray:
    """Projection of the ambient gradient onto the tangent space at ``P``."""
    G = euclidean_gradient(P, M)
    P = np.asarray(P, dtype=np.float64)
    S = P.T @ G
    return G - P @ (0.5 * (S + S.T))


def qr_retract(Q) -> np.ndarray:
    """Orthonormal QR factor of ``Q`` with the sign convention ``diag(R) >= 0``."""
    q, r = np.linalg.qr(np.asarray(Q, dtype=np.float64))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def _polar_factor(C):
    U, _, Vt = np.linalg.svd(C, full_matrices=False)
    return U @ Vt


def _random_frame(n, m, seed):
    rng = np.random.default_rng(seed)
    return qr_retract(rng.standard_normal((n, m)))


def solve_stiefel(M, opts: AsimOptions | None = None, P0=None) -> StiefelResult:
    """Maximize ``phi(P, M)`` over ``n x m`` matrices with orthonormal columns.

    Each iteration steps along the Riemannian gradient and retracts with QR.
    Steps without sufficient increase are halved (up to ``opts.max_halvings``
    times), so accepted iterates never decrease the objective. Hitting
    ``max_iter``, or failing to find an acceptable step, returns a result
    with ``converged=False``.
    """
    opts = opts or AsimOptions()
    M = as_matrix(M, "M")
    n, m = M.shape
    if n < m:
        raise ValueError(f"need n >= m, got {n}x{m}")
    if P0 is None:
        P0 = _random_frame(n, m, opts.seed) if opts.init == "random" else _polar_factor(M)
    P0 = _check_frame(P0, n, m)
    P, iters, gnorm, value, converged = kernels.stiefel_ascent(
        M, P0, opts.alpha, opts.tol, opts.max_iter, opts.max_halvings,
        opts.sufficient_increase,
    )
    return StiefelResult(P, iters, gnorm, value, converged)


def _principal_frame(Xc, target_dim):
    """Orthonormal ``n x target_dim`` frame of leading principal directions.

    Returns ``(basis, coords, rank)``; coordinates past the numerical rank are
    exactly zero.
    """
    n, count = Xc.shape
    full = target_dim > min(n, count)
    U, s, _ = np.linalg.svd(Xc, full_matrices=full)
    basis = U[:, :target_dim]
    rank = int(np.sum(s > FLAT_AXIS_RTOL * s[0])) if s.size and s[0] > 0 else 0
    coords = basis.T @ Xc
    coords[rank:] = 0.0
    return basis, coords, rank


def tangent_project(X, target_dim: int) -> np.ndarray:
    """Coordinates of the centered samples in their top principal directions.

    Returns a ``target_dim x count`` array. When the data span fewer than
    ``target_dim`` directions the trailing coordinates are zero and a
    :class:`RankDeficiencyWarning` is emitted.
    """
    X = as_matrix(X, "X")
    if not 1 <= target_dim <= X.shape[0]:
        raise ValueError(f"target_dim must lie in [1, {X.shape[0]}], got {target_dim}")
    _, coords, rank = _principal_frame(_centered(X), target_dim)
    if rank < target_dim:
        warnings.warn(
            f"data span {rank} directions, {target_dim} requested; padded with zeros",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return coords


def asim(X, Y, opts: AsimOptions | None = None) -> AlignmentResult:
    """Align ``Y`` onto ``X``; the residual is the anisotropic-scaling-free misfit.

    When ``X`` has more than ``opts.tangent_threshold`` rows the optimization
    runs in the principal coordinates of the centered ``X`` (at least ``m`` and
    at most ``count - 1`` of them). That span contains every centered sample,
    so the projection loses nothing; the returned ``P`` is mapped back to the
    ambient space.
    """
    opts = opts or AsimOptions()
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    n, k = X.shape
    m = Y.shape[0]
    if Y.shape[1] != k:
        raise ValueError(f"X has {k} samples but Y has {Y.shape[1]}")
    if k < 2:
        raise ValueError("need at least 2 samples")
    if m > n:
        raise ValueError(f"Y dimension {m} exceeds X dimension {n}")

    Xc = _centered(X)
    Yc = _centered(Y)
    x_energy = float(np.sum(Xc * Xc))
    if x_energy == 0.0:
        raise DegenerateInputError("all X samples are identical")

    basis = None
    rank_deficient = False
    Xw = Xc
    if n > opts.tangent_threshold:
        target = max(m, min(n, k - 1))
        basis, Xw, rank = _principal_frame(Xc, target)
        rank_deficient = rank < m

    M = alignment_target(Xw, Yc)
    scale = float(np.linalg.norm(M))
    if opts.init == "random":
        P0 = _random_frame(Xw.shape[0], m, opts.seed)
    else:
        P0 = _polar_factor(Xw @ Yc.T)
    if scale > 0.0:
        sol = solve_stiefel(M / scale, opts, P0)
        P, iters, gnorm, converged = sol.P, sol.iterations, sol.gradient_norm, sol.converged
    else:
        # no correlation to exploit: every frame is optimal, D = 0
        P, iters, gnorm, converged = P0, 0, 0.0, True

    if basis is not None:
        P = basis @ P
    D = optimal_scaling(Xc, Yc, P)
    R = Xc - P @ D @ Yc
    residual = float(np.sum(R * R)) / x_energy
    t = optimal_translation(X, Y, P, D)
    return AlignmentResult(
        P=P,
        D=D,
        t=t,
        residual=residual,
        iterations=iters,
        gradient_norm=gnorm,
        converged=converged,
        projected=basis is not None,
        rank_deficient=rank_deficient,
    )
