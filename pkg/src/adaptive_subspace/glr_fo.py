"""First-order GLR detectors (known/unknown subspace, HE/PHE).

All statistics are ratios of determinants or of profiled likelihood terms and
are evaluated in log space before exponentiating. In the partially-homogeneous
variants the scale estimate is the unique positive root of

    sum_j 1 / (1 + gamma * mu_j) = a,

the stationarity condition of ``f(gamma) = gamma**a * prod_j (1/gamma + mu_j)``.
Eigenvalues are ascending throughout this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import matcore

# eigenvalues at or below this fraction of the largest are treated as zero
ZERO_RTOL = 1e-12


class PreconditionError(ValueError):
    """A detector's dimension or data condition does not hold."""


@dataclass(frozen=True)
class GammaEstimate:
    gamma_hat: float
    objective_value: float  # log f(gamma_hat)
    iterations: int


def _clean_eigs(mu) -> list[float]:
    mu = np.clip(np.asarray(mu, dtype=float), 0.0, None)
    if mu.size and mu.max() > 0:
        mu[mu <= ZERO_RTOL * mu.max()] = 0.0
    return mu.tolist()


def gamma_objective(gamma: float, a: float, mu) -> float:
    """``log f(gamma) = a log(gamma) + sum_j log(1/gamma + mu_j)``."""
    return a * math.log(gamma) + sum(math.log(1.0 / gamma + m) for m in mu)


def gamma_root(a: float, mu) -> GammaEstimate:
    """Minimizer of ``gamma**a * prod_j (1/gamma + mu_j)`` over ``gamma > 0``.

    The left side of the stationary equation falls monotonically from
    ``len(mu)`` to the number of zero ``mu_j``, so a root exists and is unique
    exactly when ``#{mu_j == 0} < a < len(mu)``. The root is bracketed in
    closed form, bisected in ``log(gamma)`` to ``1e-12`` relative width, then
    polished with Newton steps kept inside the final bracket.

    Raises
    ------
    PreconditionError
        If ``a`` is outside ``(#zeros, len(mu))``.
    """
    mu = _clean_eigs(mu)
    m = len(mu)
    positive = [x for x in mu if x > 0]
    zeros = m - len(positive)
    if not zeros < a < m:
        raise PreconditionError(
            f"scale estimate undefined: need #zero eigenvalues < a < len(mu), "
            f"got a={a:.6g}, len(mu)={m}, zero count={zeros}"
        )
    c = (m - zeros) / (a - zeros) - 1.0

    def excess(g: float) -> float:
        return zeros + sum(1.0 / (1.0 + g * x) for x in positive) - a

    lo, hi = math.log(c / max(positive)), math.log(c / min(positive))
    iterations = 0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if excess(math.exp(mid)) > 0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    g_lo, g_hi = math.exp(lo), math.exp(hi)
    g = math.exp(0.5 * (lo + hi))
    for _ in range(3):
        slope = -sum(x / (1.0 + g * x) ** 2 for x in positive)
        step = excess(g) / slope
        if step == 0.0:
            break
        g = min(max(g - step, g_lo), g_hi)
        iterations += 1
    return GammaEstimate(g, gamma_objective(g, a, mu), iterations)


class GlrFoInput:
    """Primary/secondary data plus the whitened quantities the detectors share.

    ``H`` is needed by the known-subspace detectors and ``r`` by the
    unknown-subspace ones; ``r`` defaults to the column count of ``H``.
    """

    def __init__(self, Z_P, Z_S, H=None, r: int | None = None, gram=None):
        if gram is not None:
            self.secondary_gram = np.asarray(gram, dtype=complex)
        self.Z_P = np.asarray(Z_P, dtype=complex)
        self.Z_S = np.asarray(Z_S, dtype=complex)
        self.H = None if H is None else np.asarray(H, dtype=complex)
        if r is None and self.H is not None:
            r = self.H.shape[1]
        self.r = r
        self.N, self.K_P = self.Z_P.shape
        self.K_S = self.Z_S.shape[1]
        if self.Z_S.shape[0] != self.N:
            raise ValueError("Z_P and Z_S must have the same row count")

    @property
    def K(self) -> int:
        return self.K_P + self.K_S

    def require_H(self) -> np.ndarray:
        if self.H is None:
            raise ValueError("this detector needs the subspace basis H")
        return self.H

    def require_r(self) -> int:
        if self.r is None:
            raise ValueError("this detector needs the subspace dimension r")
        return self.r

    @cached_property
    def secondary_gram(self) -> np.ndarray:
        """``S_S = Z_S Z_S^H``."""
        return matcore.column_gram(self.Z_S)

    @cached_property
    def S_inv_sqrt(self) -> np.ndarray:
        return matcore.inv_sqrt(self.secondary_gram)

    @cached_property
    def X(self) -> np.ndarray:
        """Whitened primary data ``S_S^{-1/2} Z_P``."""
        return self.S_inv_sqrt @ self.Z_P

    @cached_property
    def Q(self) -> np.ndarray:
        """Orthonormal basis of ``<G>``, ``G = S_S^{-1/2} H``."""
        q, _ = np.linalg.qr(self.S_inv_sqrt @ self.require_H())
        return q

    @cached_property
    def X_perp(self) -> np.ndarray:
        """``P_G^perp X``."""
        return self.X - self.Q @ (self.Q.conj().T @ self.X)

    @cached_property
    def m0_eigs(self) -> np.ndarray:
        return np.clip(matcore.hermitian_eigvals(self.X.conj().T @ self.X), 0.0, None)

    @cached_property
    def m1_eigs(self) -> np.ndarray:
        Y = self.X_perp
        return np.clip(matcore.hermitian_eigvals(Y.conj().T @ Y), 0.0, None)

    @cached_property
    def gram_eigs(self) -> np.ndarray:
        """Ascending eigenvalues of ``S_S^{-1/2} Z_P Z_P^H S_S^{-1/2}``."""
        return np.clip(matcore.hermitian_eigvals(self.X @ self.X.conj().T), 0.0, None)


def check_fo_ks_phe(N: int, K_P: int, K: int, r: int) -> None:
    if not r < N:
        raise PreconditionError(f"FO-KS-PHE needs r < N, got r={r}, N={N}")
    lhs, rhs = min(K_P, N - r), N * K_P / K
    if not lhs > rhs:
        raise PreconditionError(
            f"FO-KS-PHE needs min(K_P, N-r) > N*K_P/K, got {lhs} <= {rhs:.6g}"
        )


def check_fo_us_phe(N: int, K_P: int, K: int, r: int) -> None:
    lhs = min(N, K_P)
    if not lhs >= r + 1:
        raise PreconditionError(f"FO-US-PHE needs min(N, K_P) >= r+1, got {lhs} < {r + 1}")
    if not lhs > N * K_P / K + r:
        raise PreconditionError(
            f"FO-US-PHE needs min(N, K_P) > N*K_P/K + r, got {lhs} <= {N * K_P / K + r:.6g}"
        )


def log_stat_fo_ks_he(inp: GlrFoInput) -> float:
    inp.require_H()
    return float(np.sum(np.log1p(inp.m0_eigs)) - np.sum(np.log1p(inp.m1_eigs)))


def stat_fo_ks_he(inp: GlrFoInput) -> float:
    """``det(I + M_0) / det(I + M_1)`` for a known subspace, homogeneous case."""
    return math.exp(log_stat_fo_ks_he(inp))


def log_stat_fo_ks_phe(inp: GlrFoInput) -> float:
    r = inp.require_H().shape[1]
    check_fo_ks_phe(inp.N, inp.K_P, inp.K, r)
    a = inp.K_P * (inp.K - inp.N) / inp.K
    est0 = gamma_root(a, inp.m0_eigs)
    est1 = gamma_root(a, inp.m1_eigs)
    return est0.objective_value - est1.objective_value


def stat_fo_ks_phe(inp: GlrFoInput) -> float:
    """Known subspace, unknown scale: ratio of the two profiled objectives
    ``min_g g**a det(I/g + M_i)`` with ``a = K_P (K - N) / K``."""
    return math.exp(log_stat_fo_ks_phe(inp))


def log_stat_fo_us_he(inp: GlrFoInput) -> float:
    r = inp.require_r()
    sig = inp.gram_eigs
    if min(inp.N, inp.K_P) >= r + 1:
        sig = sig[inp.N - r:] if r > 0 else sig[:0]
    return float(np.sum(np.log1p(sig)))


def stat_fo_us_he(inp: GlrFoInput) -> float:
    """Product of ``1 + sigma_i^2`` over the ``r`` largest whitened eigenvalues,
    or the full determinant ``det(I + W)`` when ``min(N, K_P) < r + 1``."""
    return math.exp(log_stat_fo_us_he(inp))


def log_stat_fo_us_phe(inp: GlrFoInput) -> float:
    r = inp.require_r()
    check_fo_us_phe(inp.N, inp.K_P, inp.K, r)
    a0 = inp.N * (1 - inp.K_P / inp.K)
    sig = inp.gram_eigs
    est0 = gamma_root(a0, sig)
    if r == 0:
        return 0.0
    est1 = gamma_root(a0 - r, sig[: inp.N - r])
    return est0.objective_value - est1.objective_value


def stat_fo_us_phe(inp: GlrFoInput) -> float:
    """Unknown subspace, unknown scale. The numerator profiles all ``N``
    eigenvalues with exponent ``a0 = N (1 - K_P/K)``, the denominator the
    ``N - r`` smallest with exponent ``a0 - r``."""
    return math.exp(log_stat_fo_us_phe(inp))
