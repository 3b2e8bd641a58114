"""Estimate-and-plug detectors built on the secondary-data SCM.

Each statistic is the known-covariance GLR with ``R`` replaced by
``S = Z_S Z_S^H / K_S``. Eigenvalues are descending throughout this module.

The two second-order partially-homogeneous detectors need a scale estimate
that maximizes a piecewise-smooth profile. Both profiles reduce to

    g(gamma) = -K_P (N - m) log(gamma) - base / gamma
               - sum_{i<=m} [K_P log(max(e_i/K_P, gamma)) + e_i / max(e_i/K_P, gamma)]

for suitable ``(e, base, m)``, so one branch-enumeration solver serves both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from . import matcore
from .glr_fo import PreconditionError

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class EigenShrinkage:
    raw: np.ndarray  # descending
    shrunk: np.ndarray
    kp: int


def shrinkage(raw, kp: int, scale: float = 1.0) -> EigenShrinkage:
    """``max(raw_i / (kp * scale) - 1, 0)``, the rank-limited ML shrinkage."""
    raw = np.asarray(raw, dtype=float)
    return EigenShrinkage(raw, np.maximum(raw / (kp * scale) - 1.0, 0.0), kp)


def numerical_rank(eigs_desc) -> int:
    eigs_desc = np.asarray(eigs_desc)
    if eigs_desc.size == 0 or eigs_desc[0] <= 0:
        return 0
    return int(np.count_nonzero(eigs_desc > RANK_RTOL * eigs_desc[0]))


class EpInput:
    """Primary/secondary data with SCM-whitened quantities computed on demand."""

    def __init__(self, Z_P, Z_S, H=None, r: int | None = None, gram=None):
        if gram is not None:
            self.scm = np.asarray(gram, dtype=complex) / np.shape(Z_S)[1]
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

    def require_H(self) -> np.ndarray:
        if self.H is None:
            raise ValueError("this detector needs the subspace basis H")
        return self.H

    def require_r(self) -> int:
        if self.r is None or self.r < 1:
            raise ValueError(f"this detector needs a subspace dimension r >= 1, got {self.r}")
        return self.r

    @cached_property
    def scm(self) -> np.ndarray:
        return matcore.column_gram(self.Z_S) / self.K_S

    @cached_property
    def S_inv_sqrt(self) -> np.ndarray:
        return matcore.inv_sqrt(self.scm)

    @cached_property
    def X(self) -> np.ndarray:
        return self.S_inv_sqrt @ self.Z_P

    @cached_property
    def G(self) -> np.ndarray:
        """``S^{-1/2} H`` (the same matrix as ``H_S``)."""
        return self.S_inv_sqrt @ self.require_H()

    @cached_property
    def Q(self) -> np.ndarray:
        q, _ = np.linalg.qr(self.G)
        return q

    @cached_property
    def coords(self) -> np.ndarray:
        """``Q^H X``, the whitened primary data in the basis of ``<G>``."""
        return self.Q.conj().T @ self.X

    @cached_property
    def total_energy(self) -> float:
        """``Tr[Z_P^H S^-1 Z_P]``."""
        return float(np.sum(np.abs(self.X) ** 2))

    @cached_property
    def inside_energy(self) -> float:
        return float(np.sum(np.abs(self.coords) ** 2))

    @cached_property
    def outside_energy(self) -> float:
        """``Tr[Z_P^H S^-1/2 P_G^perp S^-1/2 Z_P]``."""
        resid = self.X - self.Q @ self.coords
        return float(np.sum(np.abs(resid) ** 2))

    @cached_property
    def B(self) -> np.ndarray:
        """``L^-1 G^H X X^H G L^-H`` with ``L L^H = G^H G``."""
        L = matcore.cholesky(self.G.conj().T @ self.G)
        C = solve_triangular(L, self.G.conj().T @ self.X, lower=True)
        return C @ C.conj().T

    @cached_property
    def B_eigs(self) -> np.ndarray:
        return np.clip(matcore.hermitian_eigvals(self.B)[::-1], 0.0, None)

    @cached_property
    def gram_eigs(self) -> np.ndarray:
        """Descending eigenvalues of ``W = X X^H``."""
        return np.clip(matcore.hermitian_eigvals(self.X @ self.X.conj().T)[::-1], 0.0, None)

    def top_sum(self) -> float:
        k = min(self.require_r(), self.K_P)
        return float(np.sum(self.gram_eigs[:k]))


def profile_objective(gamma: float, e, base: float, kp: int, n: int) -> float:
    """The common profile ``g(gamma)`` maximized by the PHE second-order solvers."""
    e = np.asarray(e, dtype=float)
    denom = np.maximum(e / kp, gamma)
    return float(-kp * (n - e.size) * math.log(gamma) - base / gamma
                 - np.sum(kp * np.log(denom) + e / denom))


def piecewise_gamma(e, base: float, kp: int, n: int) -> float:
    """Maximizer of :func:`profile_objective` by branch enumeration.

    ``e`` holds the ``m`` positive eigenvalues in descending order. Branch
    ``i`` (1-based, ``i = 1..m+1``) is the interval
    ``e_i/kp <= gamma < e_{i-1}/kp`` (with ``e_0 = inf``, ``e_{m+1} = 0``), on
    which the stationary equation solves to

        gamma = (base + sum_{j>=i} e_j) / (kp * (n - i + 1)).

    Candidates inside their own interval, plus every breakpoint ``e_i/kp``,
    are scored on the profile; the best wins, ties going to the smaller value.
    """
    e = np.asarray(e, dtype=float)
    m = e.size
    if m and (np.any(np.diff(e) > 0) or e[-1] <= 0):
        raise ValueError("eigenvalues must be positive and descending")
    tails = np.concatenate([np.cumsum(e[::-1])[::-1], [0.0]])  # tails[i-1] = sum_{j>=i}
    candidates = []
    for i in range(1, m + 2):
        num = base + tails[i - 1]
        den = kp * (n - i + 1)
        if den <= 0 or num <= 0:
            continue
        g = num / den
        lower = e[i - 1] / kp if i <= m else 0.0
        upper = e[i - 2] / kp if i >= 2 else math.inf
        if lower <= g < upper:
            candidates.append(g)
    candidates.extend((e / kp).tolist())
    if not candidates:
        raise PreconditionError("scale estimate undefined: primary data carry no energy")
    candidates = sorted(set(candidates))
    scores = [profile_objective(g, e, base, kp, n) for g in candidates]
    best = max(scores)
    tol = 1e-12 * max(abs(best), 1.0)
    chosen = next(g for g, s in zip(candidates, scores) if s >= best - tol)
    assert all(profile_objective(chosen, e, base, kp, n) >= s - tol for s in scores)
    return chosen


def stat_ep_fo_ks_he(inp: EpInput) -> float:
    """Energy of the whitened primary data inside ``<H_S>``."""
    inp.require_H()
    return inp.inside_energy


def stat_ep_fo_ks_phe(inp: EpInput) -> float:
    """Total whitened energy over the energy outside ``<H_S>``; ``inf`` when
    the data lie entirely inside the subspace."""
    inp.require_H()
    if inp.outside_energy <= 0.0:
        return math.inf
    return inp.total_energy / inp.outside_energy


def stat_ep_fo_us_he(inp: EpInput) -> float:
    return inp.top_sum()


def stat_ep_fo_us_phe(inp: EpInput) -> float:
    if inp.total_energy <= 0.0:
        raise PreconditionError("EP-FO-US-PHE is undefined for Z_P = 0")
    return inp.top_sum() / inp.total_energy


def stat_ep_so_ks_he(inp: EpInput) -> float:
    """``Tr[B] - K_P sum log(1 + lam_i) - sum gamma_i / (1 + lam_i)``.

    Summed mode by mode; modes with ``lam_i = 0`` contribute exactly zero.
    """
    inp.require_H()
    lam = shrinkage(inp.B_eigs, inp.K_P)
    g = lam.raw
    return float(np.sum(g - inp.K_P * np.log1p(lam.shrunk) - g / (1.0 + lam.shrunk)))


def ep_so_ks_phe_gamma(inp: EpInput) -> float:
    inp.require_H()
    if inp.total_energy <= 0.0:
        raise PreconditionError("EP-SO-KS-PHE is undefined for Z_P = 0")
    g = inp.B_eigs[: numerical_rank(inp.B_eigs)]
    return piecewise_gamma(g, inp.outside_energy, inp.K_P, inp.N)


def stat_ep_so_ks_phe(inp: EpInput) -> float:
    gamma_hat = ep_so_ks_phe_gamma(inp)
    kp, n = inp.K_P, inp.N
    g = inp.B_eigs[: numerical_rank(inp.B_eigs)]
    delta = shrinkage(g, kp, gamma_hat).shrunk
    return float(
        kp * n * math.log(inp.total_energy) - kp * n * math.log(gamma_hat)
        - inp.outside_energy / gamma_hat
        - kp * np.sum(np.log1p(delta))
        - np.sum((g / gamma_hat) / (1.0 + delta))
    )


def stat_ep_so_us_he(inp: EpInput) -> float:
    """Second-order, unknown subspace, homogeneous. Only the ``r`` leading
    modes can carry ``q_i > 0``; the rest cancel exactly."""
    r = inp.require_r()
    sig = inp.gram_eigs[:r]
    q = shrinkage(sig, inp.K_P).shrunk
    return float(np.sum(sig - inp.K_P * np.log1p(q) - sig / (1.0 + q)))


def ep_so_us_phe_gamma(inp: EpInput) -> float:
    r = inp.require_r()
    if inp.total_energy <= 0.0:
        raise PreconditionError("EP-SO-US-PHE is undefined for Z_P = 0")
    sig = inp.gram_eigs
    r0 = numerical_rank(sig)
    if r0 <= r:
        # the low branch has no root (the profile is unbounded as gamma -> 0
        # when r0 < N), so only gamma >= sig[r0-1]/K_P is admissible
        return piecewise_gamma(sig[:r0], 0.0, inp.K_P, inp.N)
    return piecewise_gamma(sig[:r], float(np.sum(sig[r:r0])), inp.K_P, inp.N)


def stat_ep_so_us_phe(inp: EpInput) -> float:
    """Second-order, unknown subspace, unknown scale, in its two rank cases
    (``r0 <= r`` and ``r0 > r``, ``r0`` the numerical rank of ``W``)."""
    r = inp.require_r()
    gamma_hat = ep_so_us_phe_gamma(inp)
    kp, n = inp.K_P, inp.N
    sig = inp.gram_eigs
    r0 = numerical_rank(sig)
    m = min(r0, r)
    lead = sig[:m]
    q = np.maximum(lead / kp - gamma_hat, 0.0)
    stat = (kp * n * math.log(inp.total_energy)
            - kp * np.sum(np.log(gamma_hat + q))
            - kp * (n - m) * math.log(gamma_hat)
            - np.sum(lead / (gamma_hat + q)))
    if r0 > r:
        stat -= float(np.sum(sig[r:r0])) / gamma_hat
    return float(stat)
