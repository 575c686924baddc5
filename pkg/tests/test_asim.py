import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meqa.asim import (
    AsimOptions,
    DegenerateInputError,
    RankDeficiencyWarning,
    asim,
    euclidean_gradient,
    optimal_scaling,
    optimal_translation,
    phi,
    qr_retract,
    riemannian_gradient,
    solve_stiefel,
    tangent_project,
)
from meqa.baselines import procrustes_local
from meqa.neighbors import pairwise_distances

from oracles import alignment_residual, random_frame, rotation, scalar_phi

seeds = st.integers(0, 2**31 - 1)
STRETCH = np.diag([11.6414, 5.6236])


def tangent(rng, P):
    Z = rng.standard_normal(P.shape)
    S = P.T @ Z
    return Z - P @ (0.5 * (S + S.T))


# optimal translation

def test_translation_identity():
    X = np.random.default_rng(0).standard_normal((2, 6))
    np.testing.assert_allclose(optimal_translation(X, X, np.eye(2), np.eye(2)), 0, atol=1e-15)


def test_translation_pure_shift():
    X = np.random.default_rng(1).standard_normal((3, 6))
    c = np.array([1.0, -2.0, 0.5])
    t = optimal_translation(X, X - c[:, None], np.eye(3), np.eye(3))
    np.testing.assert_allclose(t, c, atol=1e-14)


def test_translation_scalar_loops():
    rng = np.random.default_rng(2)
    X, Y = rng.standard_normal((3, 10)), rng.standard_normal((2, 10))
    P, D = random_frame(rng, 3, 2), np.diag(rng.uniform(-2, 2, 2))
    expect = []
    for r in range(3):
        s = 0.0
        for c in range(10):
            s += X[r, c] - sum(P[r, j] * D[j, j] * Y[j, c] for j in range(2))
        expect.append(s / 10)
    np.testing.assert_allclose(optimal_translation(X, Y, P, D), expect, atol=1e-13)


def test_translation_dimension_mismatch():
    with pytest.raises(ValueError):
        optimal_translation(np.ones((3, 4)), np.ones((2, 5)), np.eye(3)[:, :2], np.eye(2))
    with pytest.raises(ValueError):
        optimal_translation(np.ones((3, 4)), np.ones((2, 4)), np.eye(3)[:, :2], np.eye(3))


# optimal scaling

def test_scaling_identity_and_exact():
    Yc = np.random.default_rng(3).standard_normal((2, 8))
    Yc -= Yc.mean(axis=1, keepdims=True)
    np.testing.assert_allclose(optimal_scaling(Yc, Yc, np.eye(2)), np.eye(2), atol=1e-14)
    S = np.diag([2.0, 3.0])
    np.testing.assert_allclose(optimal_scaling(S @ Yc, Yc, np.eye(2)), S, atol=1e-13)


def test_scaling_local_optimality():
    rng = np.random.default_rng(4)
    Xc, Yc = rng.standard_normal((3, 12)), rng.standard_normal((2, 12))
    Xc -= Xc.mean(axis=1, keepdims=True)
    Yc -= Yc.mean(axis=1, keepdims=True)
    P = random_frame(rng, 3, 2)
    D = optimal_scaling(Xc, Yc, P)

    def obj(D):
        return float(np.sum((Xc - P @ D @ Yc) ** 2))

    base = obj(D)
    for j in range(2):
        for h in (1e-3, -1e-3):
            E = D.copy()
            E[j, j] += h
            assert obj(E) >= base


def test_scaling_flat_axis_is_zero():
    Yc = np.vstack([np.linspace(-1, 1, 6), np.zeros(6)])
    Xc = np.random.default_rng(5).standard_normal((3, 6))
    D = optimal_scaling(Xc, Yc, random_frame(np.random.default_rng(6), 3, 2))
    assert D[1, 1] == 0.0


# objective and gradient

def test_phi_examples():
    rng = np.random.default_rng(7)
    M = random_frame(rng, 5, 3)
    assert phi(M, M) == pytest.approx(3.0)
    P = np.eye(4)[:, :2]
    M = np.zeros((4, 2))
    M[2:, :] = rng.standard_normal((2, 2))
    assert phi(P, M) == 0.0


@given(seeds, st.integers(1, 6), st.integers(1, 3))
def test_phi_scalar_loops(seed, n, m):
    m = min(m, n)
    rng = np.random.default_rng(seed)
    P, M = random_frame(rng, n, m), rng.standard_normal((n, m))
    assert phi(P, M) == pytest.approx(scalar_phi(P.tolist(), M.tolist()), rel=1e-12, abs=1e-14)


def test_gradient_stationary_scalar_case():
    M = np.array([[2.5]])
    for p in (1.0, -1.0):
        assert riemannian_gradient(np.array([[p]]), M)[0, 0] == 0.0


def test_gradient_finite_differences_n4_m2():
    rng = np.random.default_rng(8)
    P, M = random_frame(rng, 4, 2), rng.standard_normal((4, 2))
    g = riemannian_gradient(P, M)
    h = 1e-6
    for _ in range(10):
        xi = tangent(rng, P)
        fd = (phi(qr_retract(P + h * xi), M) - phi(qr_retract(P - h * xi), M)) / (2 * h)
        an = float(np.sum(g * xi))
        assert abs(fd - an) <= 1e-5 * abs(an)


@given(seeds, st.integers(1, 6), st.integers(1, 3))
def test_gradient_is_tangent(seed, n, m):
    m = min(m, n)
    rng = np.random.default_rng(seed)
    P, M = random_frame(rng, n, m), rng.standard_normal((n, m))
    g = riemannian_gradient(P, M)
    S = P.T @ g
    assert np.abs(S + S.T).max() <= 1e-10 * max(1.0, np.abs(M).max() ** 2)


def test_euclidean_gradient_finite_differences():
    rng = np.random.default_rng(9)
    P, M = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    G = euclidean_gradient(P, M)
    h = 1e-6
    for i in range(3):
        for j in range(2):
            E = np.zeros_like(P)
            E[i, j] = h
            fd = (phi(P + E, M) - phi(P - E, M)) / (2 * h)
            assert fd == pytest.approx(G[i, j], rel=1e-6, abs=1e-9)


# Stiefel solver

def test_solver_diagonal_dominant():
    M = np.array([[3.0, 0.2], [0.1, 2.0]])
    P0 = qr_retract(np.array([[1.0, 0.4], [-0.3, 1.0]]))
    res = solve_stiefel(M, P0=P0)
    assert res.converged
    np.testing.assert_allclose(np.abs(res.P), np.eye(2), atol=0.2)
    assert res.phi >= phi(P0, M)
    assert res.phi == pytest.approx(phi(res.P, M))


@pytest.mark.parametrize("seed", range(5))
def test_solver_angle_grid(seed):
    rng = np.random.default_rng(100 + seed)
    M = rng.standard_normal((2, 1))
    theta = np.arange(0, 2 * math.pi, 1e-4)
    grid = (np.cos(theta) * M[0, 0] + np.sin(theta) * M[1, 0]) ** 2
    res = solve_stiefel(M, AsimOptions(init="random", seed=seed))
    assert abs(res.phi - grid.max()) <= 1e-3


def test_solver_huge_step_terminates():
    rng = np.random.default_rng(11)
    M = rng.standard_normal((5, 2))
    res = solve_stiefel(M, AsimOptions(alpha=1e12, max_iter=50, init="random"))
    assert res.iterations <= 50
    np.testing.assert_allclose(res.P.T @ res.P, np.eye(2), atol=1e-8)
    assert res.phi >= phi(qr_retract(np.random.default_rng(0).standard_normal((5, 2))), M) - 1e-12


@given(seeds, st.sampled_from([0.0, 0.5]))
@settings(max_examples=20, deadline=None)
def test_solver_monotone_ascent(seed, c):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((4, 2))
    P0 = random_frame(rng, 4, 2)
    values = [
        solve_stiefel(M, AsimOptions(max_iter=i, sufficient_increase=c, alpha=0.5), P0).phi
        for i in range(1, 12)
    ]
    assert np.all(np.diff([phi(P0, M)] + values) >= -1e-12)


def test_solver_rejects_wide_target():
    with pytest.raises(ValueError):
        solve_stiefel(np.ones((2, 3)))


# asim

def test_asim_identity():
    X = np.random.default_rng(12).standard_normal((3, 10))
    assert asim(X, X).residual < 1e-10


def test_asim_rotated_anisotropic_scaling():
    rng = np.random.default_rng(13)
    Y = rng.uniform(-1, 1, (2, 100))
    X = rotation(0.7) @ STRETCH @ Y
    res = asim(X, Y)
    assert res.residual < 1e-6
    np.testing.assert_allclose(np.sort(np.abs(res.scales)), [5.6236, 11.6414], rtol=1e-6)
    Xc = X - X.mean(axis=1, keepdims=True)
    mp = procrustes_local(X, Y) / np.sum(Xc ** 2)
    assert mp > 0.5
    mpc = procrustes_local(X, Y, allow_scale=True) / np.sum(Xc ** 2)
    assert mpc > 1e-2


@pytest.mark.parametrize("seed", range(4))
def test_asim_multi_restart_oracle(seed):
    rng = np.random.default_rng(200 + seed)
    X, Y = rng.standard_normal((3, 10)), rng.standard_normal((2, 10))
    res = asim(X, Y)
    assert 0 < res.residual <= 1
    assert res.residual == pytest.approx(alignment_residual(X, Y, res.P.tolist()), abs=1e-10)
    Xc, Yc = X - X.mean(1, keepdims=True), Y - Y.mean(1, keepdims=True)
    M = Xc @ Yc.T / np.sqrt(np.sum(Yc ** 2, axis=1))
    M /= np.linalg.norm(M)
    best = min(
        alignment_residual(X, Y, solve_stiefel(M, P0=random_frame(rng, 3, 2)).P.tolist())
        for _ in range(200)
    )
    assert res.residual - best < 1e-3


def test_asim_result_fields():
    rng = np.random.default_rng(14)
    X, Y = rng.standard_normal((4, 12)), rng.standard_normal((2, 12))
    res = asim(X, Y)
    np.testing.assert_allclose(res.P.T @ res.P, np.eye(2), atol=1e-8)
    assert res.converged and res.gradient_norm < AsimOptions().tol
    fit = res.P @ res.D @ Y + res.t[:, None]
    Xc = X - X.mean(1, keepdims=True)
    assert res.residual == pytest.approx(np.sum((X - fit) ** 2) / np.sum(Xc ** 2), rel=1e-10)


def test_asim_errors():
    with pytest.raises(DegenerateInputError):
        asim(np.ones((3, 5)), np.random.default_rng(0).standard_normal((2, 5)))
    with pytest.raises(ValueError):
        asim(np.ones((2, 5)), np.ones((3, 5)))
    with pytest.raises(ValueError):
        asim(np.ones((3, 5)), np.ones((2, 4)))
    with pytest.raises(ValueError):
        AsimOptions(alpha=0)
    with pytest.raises(ValueError):
        AsimOptions(init="svd")


def test_asim_flat_embedding_scores_one():
    X = np.random.default_rng(15).standard_normal((3, 8))
    res = asim(X, np.zeros((2, 8)))
    assert res.residual == pytest.approx(1.0)
    assert np.all(res.D == 0)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([2, 3, 10]), st.sampled_from([5, 20]))
def test_zero_law(seed, n, k):
    X = np.random.default_rng(seed).standard_normal((n, k))
    assert asim(X, X).residual < 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 6), st.integers(1, 3), st.integers(4, 25))
def test_model_invariance(seed, n, m, k):
    m = min(m, n)
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((m, k))
    P = random_frame(rng, n, m)
    D = np.diag(rng.uniform(0.1, 10, m) * rng.choice([-1, 1], m))
    t = rng.standard_normal(n) * 5
    assert asim(P @ D @ Y + t[:, None], Y).residual < 1e-4


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(4, 20))
def test_translation_and_scale_invariance(seed, n, k):
    rng = np.random.default_rng(seed)
    X, Y = rng.standard_normal((n, k)), rng.standard_normal((2, k))
    base = asim(X, Y).residual
    c = rng.standard_normal(n)[:, None] * 10
    assert asim(X + c, Y).residual == pytest.approx(base, abs=1e-10)
    for s in (1e-3, 7.0, 1e4):
        assert asim(s * X, Y).residual == pytest.approx(base, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(1, 3), st.integers(3, 20))
def test_residual_range(seed, n, m, k):
    m = min(m, n)
    rng = np.random.default_rng(seed)
    res = asim(rng.standard_normal((n, k)), rng.standard_normal((m, k)))
    assert 0 <= res.residual <= 1 + 1e-12
    assert not res.converged or res.gradient_norm < AsimOptions().tol


# tangent projection

def test_tangent_project_planar_distances():
    rng = np.random.default_rng(16)
    B = random_frame(rng, 3, 2)
    X = B @ rng.standard_normal((2, 15)) + rng.standard_normal((3, 1))
    T = tangent_project(X, 2)
    assert T.shape == (2, 15)
    np.testing.assert_allclose(pairwise_distances(T), pairwise_distances(X), atol=1e-10)


def test_tangent_project_full_dim_keeps_asim():
    rng = np.random.default_rng(17)
    X, Y = rng.standard_normal((4, 12)), rng.standard_normal((2, 12))
    assert asim(tangent_project(X, 4), Y).residual == pytest.approx(asim(X, Y).residual, abs=1e-8)


def test_tangent_project_high_dimensional():
    rng = np.random.default_rng(18)
    U = rng.uniform(-1, 1, (2, 30))
    B = random_frame(rng, 560, 2)
    X = B @ U + 1e-8 * rng.standard_normal((560, 30))
    Y = np.vstack([U[0] + 0.3 * U[1] ** 2, U[1]])
    direct = asim(X, Y)
    assert direct.projected
    assert direct.P.shape == (560, 2)
    assert asim(tangent_project(X, 2), Y).residual == pytest.approx(direct.residual, abs=1e-6)
    wide = asim(X, Y, AsimOptions(tangent_threshold=1000))
    assert not wide.projected
    assert wide.residual == pytest.approx(direct.residual, abs=1e-8)


def test_tangent_project_rank_warning():
    X = np.vstack([np.linspace(0, 1, 6), np.zeros(6), np.zeros(6)])
    with pytest.warns(RankDeficiencyWarning):
        T = tangent_project(X, 2)
    assert np.all(T[1] == 0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tangent_project(np.random.default_rng(0).standard_normal((3, 6)), 2)
