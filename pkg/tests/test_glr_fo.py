import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_subspace import glr_fo
from adaptive_subspace.glr_fo import GlrFoInput, PreconditionError, gamma_root

from conftest import cn, random_basis, random_hpd, random_instance
from oracles import fo_objective, grid_gamma_root

STATS = {
    "ks_he": glr_fo.stat_fo_ks_he,
    "ks_phe": glr_fo.stat_fo_ks_phe,
    "us_he": glr_fo.stat_fo_us_he,
    "us_phe": glr_fo.stat_fo_us_phe,
}


def residual(est, a, mu):
    return abs(sum(1.0 / (1.0 + est.gamma_hat * m) for m in mu) - a)


# --- gamma_root ---------------------------------------------------------------


@pytest.mark.parametrize("m, a, mu", [(4, 2.0, 1.0), (6, 1.5, 0.3), (16, 10.67, 42.0), (3, 2.9, 1e-3)])
def test_gamma_root_equal_eigenvalues(m, a, mu):
    est = gamma_root(a, [mu] * m)
    assert est.gamma_hat == pytest.approx((m / a - 1) / mu, rel=1e-12)


def test_gamma_root_unit_case():
    assert gamma_root(2.0, [1, 1, 1, 1]).gamma_hat == pytest.approx(1.0, rel=1e-12)


def test_gamma_root_with_zero_eigenvalues():
    mu = [0.0, 0.0, 2.0, 5.0, 9.0]
    est = gamma_root(3.1, mu)
    assert residual(est, 3.1, mu) <= 1e-12
    assert est.gamma_hat == pytest.approx(grid_gamma_root(3.1, mu), rel=1e-6)


@pytest.mark.parametrize("a, mu", [(0.0, [1, 2]), (2.0, [1, 2]), (1.0, [0, 3]), (2.0, [0, 0, 1])])
def test_gamma_root_precondition(a, mu):
    with pytest.raises(PreconditionError, match="zero count"):
        gamma_root(a, mu)


def test_gamma_root_is_minimizer():
    mu = [0.2, 1.0, 7.0, 30.0]
    est = gamma_root(1.7, mu)
    for g in (est.gamma_hat * 0.99, est.gamma_hat * 1.01):
        assert fo_objective(g, 1.7, mu) > est.objective_value
    assert est.objective_value == pytest.approx(fo_objective(est.gamma_hat, 1.7, mu), rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 16), frac=st.floats(0.1, 0.9),
       zeros=st.integers(0, 4))
def test_gamma_root_residual_and_oracle(seed, m, frac, zeros):
    r = np.random.default_rng(seed)
    mu = np.concatenate([np.zeros(zeros), 10 ** r.uniform(-1.5, 1.5, m)])
    a = zeros + frac * m
    est = gamma_root(a, mu)
    assert residual(est, a, mu) <= 1e-12
    assert est.gamma_hat == pytest.approx(grid_gamma_root(a, mu), rel=1e-6)


# --- statistics -----------------------------------------------------------------


def test_zero_primary_gives_one(rng):
    _, Z_S, H = random_instance(rng)
    inp = GlrFoInput(np.zeros((8, 8)), Z_S, H)
    assert glr_fo.stat_fo_ks_he(inp) == 1.0
    assert glr_fo.stat_fo_us_he(inp) == 1.0


def test_ks_he_full_subspace(rng):
    Z_P, Z_S, _ = random_instance(rng)
    q, _ = np.linalg.qr(cn(rng, 8, 8))
    inp = GlrFoInput(Z_P, Z_S, q)
    M0 = Z_P.conj().T @ np.linalg.solve(Z_S @ Z_S.conj().T, Z_P)
    expected = np.linalg.slogdet(np.eye(8) + M0)[1]
    assert glr_fo.log_stat_fo_ks_he(inp) == pytest.approx(expected, rel=1e-10)


def test_ks_he_direct_formula(rng):
    Z_P, Z_S, H = random_instance(rng)
    S = Z_S @ Z_S.conj().T
    w, v = np.linalg.eigh(S)
    S_is = (v / np.sqrt(w)) @ v.conj().T
    G = S_is @ H
    P_perp = np.eye(8) - G @ np.linalg.solve(G.conj().T @ G, G.conj().T)
    M0 = Z_P.conj().T @ S_is @ S_is @ Z_P
    M1 = Z_P.conj().T @ S_is @ P_perp @ S_is @ Z_P
    expected = np.linalg.slogdet(np.eye(8) + M0)[1] - np.linalg.slogdet(np.eye(8) + M1)[1]
    assert glr_fo.log_stat_fo_ks_he(GlrFoInput(Z_P, Z_S, H)) == pytest.approx(expected, rel=1e-10)


def test_ks_phe_identical_projections(rng):
    # data confined to a subspace whose whitened image is orthogonal to G
    N, K_P = 8, 8
    Z_S = cn(rng, N, 4 * N)
    S_is = glr_fo.matcore.inv_sqrt(Z_S @ Z_S.conj().T)
    H = np.eye(N)[:, :2]
    G = S_is @ H
    q, _ = np.linalg.qr(G, mode="complete")
    X = q[:, 2:] @ cn(rng, N - 2, K_P)
    Z_P = np.linalg.solve(S_is, X)
    inp = GlrFoInput(Z_P, Z_S, H)
    np.testing.assert_allclose(inp.m0_eigs, inp.m1_eigs, rtol=1e-9, atol=1e-9)
    assert glr_fo.stat_fo_ks_phe(inp) == pytest.approx(1.0, rel=1e-8)


def test_ks_phe_precondition_error(rng):
    # N=8, K_P=8, K_S=8, r=6: min(8, 2) = 2 < 64/16 = 4
    inp = GlrFoInput(cn(rng, 8, 8), cn(rng, 8, 8), random_basis(rng, 8, 6))
    with pytest.raises(PreconditionError, match="min\\(K_P, N-r\\)"):
        glr_fo.stat_fo_ks_phe(inp)


def test_us_phe_precondition_error(rng):
    inp = GlrFoInput(cn(rng, 8, 3), cn(rng, 8, 8), r=3)
    with pytest.raises(PreconditionError, match="r\\+1"):
        glr_fo.stat_fo_us_phe(inp)


def test_us_he_eigen_product_matches_determinant(rng):
    # K_P=3, r=3: min(N, K_P) < r + 1, so the full determinant form applies
    Z_P, Z_S = cn(rng, 8, 3), cn(rng, 8, 16)
    inp = GlrFoInput(Z_P, Z_S, r=3)
    W = inp.X @ inp.X.conj().T
    det_form = np.linalg.slogdet(np.eye(8) + W)[1]
    nz = np.sort(inp.gram_eigs)[-3:]
    assert glr_fo.log_stat_fo_us_he(inp) == pytest.approx(det_form, rel=1e-10)
    assert np.sum(np.log1p(nz)) == pytest.approx(det_form, rel=1e-10)


def test_us_he_rank_one(rng):
    u, v = cn(rng, 8, 1), cn(rng, 1, 8)
    inp = GlrFoInput(u @ v, cn(rng, 8, 16), r=1)
    W = inp.X @ inp.X.conj().T
    top = np.linalg.eigvalsh(W)[-1]
    assert glr_fo.stat_fo_us_he(inp) == pytest.approx(1 + top, rel=1e-10)


def test_us_phe_r_zero(rng):
    Z_P, Z_S, _ = random_instance(rng)
    assert glr_fo.stat_fo_us_phe(GlrFoInput(Z_P, Z_S, r=0)) == 1.0


def _two_grid(a0, mu0, a1, mu1):
    g0, g1 = grid_gamma_root(a0, mu0), grid_gamma_root(a1, mu1)
    return fo_objective(g0, a0, mu0) - fo_objective(g1, a1, mu1)


def test_ks_phe_matches_two_grid_oracle(rng):
    for _ in range(5):
        Z_P, Z_S, H = random_instance(rng)
        inp = GlrFoInput(Z_P, Z_S, H)
        a = inp.K_P * (inp.K - inp.N) / inp.K
        expected = math.exp(_two_grid(a, inp.m0_eigs, a, inp.m1_eigs))
        assert glr_fo.stat_fo_ks_phe(inp) == pytest.approx(expected, rel=1e-6)


def test_us_phe_matches_two_grid_oracle(rng):
    for _ in range(5):
        Z_P, Z_S, H = random_instance(rng)
        inp = GlrFoInput(Z_P, Z_S, r=2)
        sig = np.sort(inp.gram_eigs)
        a0 = inp.N * (1 - inp.K_P / inp.K)
        expected = math.exp(_two_grid(a0, sig, a0 - 2, sig[:-2]))
        assert glr_fo.stat_fo_us_phe(inp) == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("c", [1e-3, 0.7, 250.0])
def test_joint_scaling_invariance(rng, c):
    Z_P, Z_S, H = random_instance(rng)
    a = GlrFoInput(Z_P, Z_S, H)
    b = GlrFoInput(c * Z_P, c * Z_S, H)
    for fn in STATS.values():
        assert fn(b) == pytest.approx(fn(a), rel=1e-10)


@pytest.mark.parametrize("c", [1e-2, 3.0 - 4.0j, 90.0])
def test_phe_primary_scaling_invariance(rng, c):
    Z_P, Z_S, H = random_instance(rng)
    a = GlrFoInput(Z_P, Z_S, H)
    b = GlrFoInput(c * Z_P, Z_S, H)
    assert glr_fo.stat_fo_ks_phe(b) == pytest.approx(glr_fo.stat_fo_ks_phe(a), rel=1e-8)
    assert glr_fo.stat_fo_us_phe(b) == pytest.approx(glr_fo.stat_fo_us_phe(a), rel=1e-8)


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_statistics_at_least_one(seed):
    r = np.random.default_rng(seed)
    Z_P, Z_S, H = random_instance(r, signal=10 ** r.uniform(-2, 2))
    inp = GlrFoInput(Z_P, Z_S, H)
    for fn in STATS.values():
        assert fn(inp) >= 1 - 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_ks_he_invariant_under_joint_transform(seed):
    r = np.random.default_rng(seed)
    Z_P, Z_S, H = random_instance(r)
    A = random_hpd(r, 8, cond=30) @ np.linalg.qr(cn(r, 8, 8))[0]
    AH, _ = np.linalg.qr(A @ H)
    a = glr_fo.stat_fo_ks_he(GlrFoInput(Z_P, Z_S, H))
    b = glr_fo.stat_fo_ks_he(GlrFoInput(A @ Z_P, A @ Z_S, AH))
    assert b == pytest.approx(a, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_secondary_permutation(seed):
    r = np.random.default_rng(seed)
    Z_P, Z_S, H = random_instance(r)
    perm = r.permutation(Z_S.shape[1])
    a = GlrFoInput(Z_P, Z_S, H)
    b = GlrFoInput(Z_P, Z_S[:, perm], H)
    for fn in STATS.values():
        assert fn(b) == fn(a)
