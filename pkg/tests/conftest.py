import numpy as np
import pytest

# (criterion id, passed, detail) recorded by test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hpd(rng, n, cond=10.0):
    q, _ = np.linalg.qr(cn(rng, n, n))
    vals = np.geomspace(1.0, cond, n)
    return (q * vals) @ q.conj().T


def random_basis(rng, N, r):
    q, _ = np.linalg.qr(cn(rng, N, r))
    return q


def random_instance(rng, N=8, K_P=8, K_S=16, r=2, signal=None):
    """Colored data with an optional low-rank primary component of random strength."""
    R = random_hpd(rng, N, cond=rng.uniform(2, 1e3))
    L = np.linalg.cholesky(R)
    Z_S = L @ cn(rng, N, K_S)
    Z_P = L @ cn(rng, N, K_P)
    H = random_basis(rng, N, r)
    if signal is None:
        signal = 10 ** rng.uniform(-1, 2)
    Z_P = Z_P + signal * H @ cn(rng, r, K_P)
    return Z_P, Z_S, H


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda t: int(t[0].split(".")[0])):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")
