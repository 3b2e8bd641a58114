import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_subspace import matcore
from adaptive_subspace.rng import RngStream

from conftest import cn, random_hpd


def test_eig_identity():
    vals, vecs = matcore.hermitian_eig(np.eye(3))
    np.testing.assert_allclose(vals, [1, 1, 1])
    np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(3), atol=1e-14)


def test_eig_diagonal():
    vals, vecs = matcore.hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(vals, [1, 2, 3])
    np.testing.assert_allclose(np.abs(vecs), np.eye(3)[:, [1, 2, 0]], atol=1e-14)


def test_eig_reconstruction(rng):
    a = cn(rng, 6, 6)
    a = a + a.conj().T
    vals, vecs = matcore.hermitian_eig(a)
    assert np.all(np.diff(vals) >= 0)
    err = np.linalg.norm(a - (vecs * vals) @ vecs.conj().T) / np.linalg.norm(a)
    assert err <= 1e-8


def test_eig_rejects_nonfinite():
    with pytest.raises(ValueError):
        matcore.hermitian_eig(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_inv_sqrt_cases(rng):
    np.testing.assert_allclose(matcore.inv_sqrt(np.eye(4)), np.eye(4), atol=1e-15)
    np.testing.assert_allclose(matcore.inv_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]))
    a = random_hpd(rng, 7, cond=1e3)
    b = matcore.inv_sqrt(a)
    assert np.linalg.norm(b @ a @ b - np.eye(7)) <= 1e-8 * np.sqrt(7)


def test_inv_sqrt_rejects_singular():
    with pytest.raises(matcore.NotPositiveDefiniteError) as info:
        matcore.inv_sqrt(np.diag([1.0, 0.0]))
    assert info.value.min_eigenvalue == 0.0
    assert "smallest eigenvalue" in str(info.value)


def test_cholesky_cases(rng):
    np.testing.assert_allclose(matcore.cholesky(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(matcore.cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    g = cn(rng, 8, 3)
    a = g.conj().T @ g
    L = matcore.cholesky(a)
    assert np.allclose(np.triu(L, 1), 0)
    assert np.all(np.diagonal(L).real > 0) and np.allclose(np.diagonal(L).imag, 0)
    assert np.linalg.norm(L @ L.conj().T - a) <= 1e-10 * np.linalg.norm(a)


def test_cholesky_reports_pivot():
    with pytest.raises(matcore.NotPositiveDefiniteError) as info:
        matcore.cholesky(np.diag([1.0, 2.0, -1.0]))
    assert info.value.pivot == 2


def test_logdet(rng):
    a = random_hpd(rng, 5)
    assert matcore.logdet_hpd(a) == pytest.approx(np.linalg.slogdet(a)[1], rel=1e-12)


def test_sampling_zero_factor():
    out = matcore.sample_colored_gaussian(np.zeros((3, 3)), 5, RngStream(1, 1))
    assert out.shape == (3, 5) and not out.any()


def test_sampling_white_covariance():
    N = 4
    w = matcore.sample_colored_gaussian(np.eye(N), 100_000, RngStream(3, 0))
    S = w @ w.conj().T / w.shape[1]
    assert np.linalg.norm(S - np.eye(N)) <= 0.05 * np.sqrt(N)
    # real and imaginary parts each carry half the variance
    assert np.var(w.real) == pytest.approx(0.5, rel=0.02)
    assert np.var(w.imag) == pytest.approx(0.5, rel=0.02)


def test_sampling_colored_covariance(rng):
    R = random_hpd(rng, 5, cond=50)
    w = matcore.sample_colored_gaussian(matcore.cholesky(R), 100_000, RngStream(3, 1))
    S = w @ w.conj().T / w.shape[1]
    assert np.linalg.norm(S - R) / np.linalg.norm(R) <= 0.05


def test_sampling_reproducible():
    a = matcore.sample_colored_gaussian(np.eye(3), 7, RngStream(11, 5))
    b = matcore.sample_colored_gaussian(np.eye(3), 7, RngStream(11, 5))
    c = matcore.sample_colored_gaussian(np.eye(3), 7, RngStream(11, 6))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 9)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=dims)
def test_inv_sqrt_commutes(seed, n):
    a = random_hpd(np.random.default_rng(seed), n, cond=100)
    b = matcore.inv_sqrt(a)
    assert np.linalg.norm(b @ a - a @ b) <= 1e-8 * np.linalg.norm(a) * np.linalg.norm(b)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=dims)
def test_eigenvalues_unitary_invariant(seed, n):
    r = np.random.default_rng(seed)
    a = cn(r, n, n)
    a = a + a.conj().T
    q, _ = np.linalg.qr(cn(r, n, n))
    v1 = matcore.hermitian_eig(a).values
    v2 = matcore.hermitian_eig(q @ a @ q.conj().T).values
    assert np.max(np.abs(v1 - v2)) <= 1e-10 * np.max(np.abs(v1))


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=dims)
def test_trace_equals_eigen_sum(seed, n):
    a = random_hpd(np.random.default_rng(seed), n, cond=20)
    vals = matcore.hermitian_eig(a).values
    assert np.sum(vals) == pytest.approx(np.trace(a).real, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=dims, k=st.integers(1, 40))
def test_column_gram_order_free(seed, n, k):
    r = np.random.default_rng(seed)
    z = cn(r, n, k)
    g = matcore.column_gram(z)
    assert np.linalg.norm(g - z @ z.conj().T) <= 1e-12 * np.linalg.norm(z) ** 2
    perm = r.permutation(k)
    assert np.array_equal(matcore.column_gram(z[:, perm]), g)
    assert np.array_equal(matcore.column_gram(np.asfortranarray(z[:, perm])), g)
