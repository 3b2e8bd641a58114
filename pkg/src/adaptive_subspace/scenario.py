"""Simulation world: clutter covariance, signal subspace, and data generation.

Data follow the two-channel model with primary covariance ``R`` and secondary
covariance ``gamma * R`` (``gamma = 1`` in a homogeneous environment). Under
H1 the ``i``-th primary column carries ``alpha_i * v(phi_i)``, with the
electrical angles drawn from a discretized sector.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import matcore
from .rng import as_generator

HE, PHE = "HE", "PHE"
FIRST, SECOND = "first", "second"
H0, H1 = "H0", "H1"

DEFAULT_THETA = 2 * math.pi * (2 / 360)


@dataclass(frozen=True)
class ScenarioConfig:
    """All parameters of one simulated scenario.

    ``gamma`` is the linear secondary-to-primary power ratio and is ignored
    by data generation when ``env == "HE"``.
    """

    N: int = 16
    K_P: int = 16
    K_S: int = 32
    r: int = 2
    cnr_db: float = 30.0
    rho_c: float = 0.95
    gamma: float = 2.0
    theta_rad: float = DEFAULT_THETA
    phase_step: float = 0.02
    env: str = HE
    order: str = FIRST

    def __post_init__(self):
        if self.N < 1 or self.K_P < 1:
            raise ValueError(f"need N >= 1 and K_P >= 1, got N={self.N}, K_P={self.K_P}")
        if self.K_S < self.N:
            raise ValueError(f"need K_S >= N, got K_S={self.K_S}, N={self.N}")
        if not 1 <= self.r <= self.N:
            raise ValueError(f"need 1 <= r <= N, got r={self.r}, N={self.N}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0 <= self.rho_c < 1:
            raise ValueError(f"rho_c must lie in [0, 1), got {self.rho_c}")
        if not 0 < self.beta < 1:
            raise ValueError(f"sin(theta) must lie in (0, 1), got {self.beta}")
        if not self.phase_step > 0:
            raise ValueError(f"phase_step must be positive, got {self.phase_step}")
        if self.env not in (HE, PHE):
            raise ValueError(f"env must be HE or PHE, got {self.env!r}")
        if self.order not in (FIRST, SECOND):
            raise ValueError(f"order must be first or second, got {self.order!r}")

    @property
    def K(self) -> int:
        return self.K_P + self.K_S

    @property
    def beta(self) -> float:
        return math.sin(self.theta_rad)

    @property
    def sigma_c2(self) -> float:
        return 10.0 ** (self.cnr_db / 10.0)

    @property
    def effective_gamma(self) -> float:
        return self.gamma if self.env == PHE else 1.0

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def digest(self) -> str:
        """Short stable hash binding results to this exact configuration."""
        fields = {k: (repr(float(v)) if isinstance(v, float) else v)
                  for k, v in dataclasses.asdict(self).items()}
        blob = json.dumps(fields, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class SignalDraw:
    phases: np.ndarray
    amplitudes: np.ndarray


@dataclass(frozen=True)
class Dataset:
    Z_P: np.ndarray
    Z_S: np.ndarray
    truth: str
    sinr_db: float | None = None


def clutter_covariance(N: int, cnr_db: float, rho_c: float) -> np.ndarray:
    """``R = I + sigma_c^2 * M_c`` with ``M_c[i, j] = rho_c ** |i - j|``."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    if not 0 <= rho_c < 1:
        raise ValueError(f"rho_c must lie in [0, 1), got {rho_c}")
    lags = np.abs(np.subtract.outer(np.arange(N), np.arange(N)))
    sigma_c2 = 10.0 ** (cnr_db / 10.0)
    return (np.eye(N) + sigma_c2 * rho_c ** lags).astype(complex)


def steering_vector(N: int, phi: float) -> np.ndarray:
    """Unit-norm steering column ``exp(1j * k * phi) / sqrt(N)``, shape ``(N, 1)``."""
    return (np.exp(1j * phi * np.arange(N)) / math.sqrt(N)).reshape(N, 1)


def sector_correlation(N: int, beta: float) -> np.ndarray:
    """Sector correlation ``2 * pi * beta * sinc((n - m) * beta)``.

    ``np.sinc`` is the normalized sinc, which makes the entry equal to the
    integral of ``exp(1j * w * (n - m))`` over ``[-pi*beta, pi*beta]``.
    """
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    lag = np.subtract.outer(np.arange(N), np.arange(N))
    return (2 * math.pi * beta * np.sinc(lag * beta)).astype(complex)


def sector_subspace(N: int, r: int, beta: float) -> np.ndarray:
    """Orthonormal ``N x r`` basis of the ``r`` dominant sector eigenvectors."""
    if not 1 <= r <= N:
        raise ValueError(f"need 1 <= r <= N, got r={r}, N={N}")
    _, vectors = matcore.hermitian_eig(sector_correlation(N, beta))
    return np.ascontiguousarray(vectors[:, ::-1][:, :r])


def phase_grid(beta: float, step: float) -> np.ndarray:
    """Grid ``-pi*beta + k*step`` for ``k = 0, 1, ...`` not exceeding ``pi*beta``."""
    half = math.pi * beta
    count = math.floor(2 * half / step * (1 + 1e-12)) + 1
    return -half + step * np.arange(count)


class Scene:
    """Quantities derived once per configuration (covariance, basis, grid)."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.R = clutter_covariance(cfg.N, cfg.cnr_db, cfg.rho_c)
        self.R_chol = matcore.cholesky(self.R)
        self.R_inv = np.linalg.inv(self.R)
        self.H = sector_subspace(cfg.N, cfg.r, cfg.beta)
        self.grid = phase_grid(cfg.beta, cfg.phase_step)
        self.secondary_chol = math.sqrt(cfg.effective_gamma) * self.R_chol

    def steering_matrix(self, phases: np.ndarray) -> np.ndarray:
        N = self.cfg.N
        return np.exp(1j * np.outer(np.arange(N), phases)) / math.sqrt(N)


@functools.lru_cache(maxsize=64)
def scene(cfg: ScenarioConfig) -> Scene:
    return Scene(cfg)


def signal_power(cfg: ScenarioConfig, phases: np.ndarray) -> float:
    """``Tr(V_P^H R^-1 V_P)`` for the steering matrix built from ``phases``."""
    sc = scene(cfg)
    V = sc.steering_matrix(phases)
    return float(np.real(np.einsum("ik,ij,jk->", V.conj(), sc.R_inv, V)))


def draw_signal(cfg: ScenarioConfig, sinr_db: float, rng) -> SignalDraw:
    """Draw angles and amplitudes so that the trial's SINR matches ``sinr_db``.

    First order: common magnitude ``|alpha|`` with uniform phases. Second
    order: i.i.d. CN(0, sigma_alpha^2) amplitudes. In both cases the scale is
    set from the realized steering matrix.
    """
    if math.isnan(sinr_db) or sinr_db == math.inf:
        raise ValueError(f"sinr_db must be finite or -inf, got {sinr_db}")
    gen = as_generator(rng)
    sc = scene(cfg)
    phases = sc.grid[gen.integers(0, sc.grid.size, size=cfg.K_P)]
    power = 10.0 ** (sinr_db / 10.0) / signal_power(cfg, phases)
    if cfg.order == FIRST:
        carrier = np.exp(2j * math.pi * gen.random(cfg.K_P))
        amplitudes = math.sqrt(power) * carrier
    else:
        amplitudes = math.sqrt(power) * matcore.complex_normal(gen, (cfg.K_P,))
    return SignalDraw(phases, amplitudes)


def generate_dataset(cfg: ScenarioConfig, truth: str, sinr_db: float | None, rng) -> Dataset:
    """One trial of primary and secondary data.

    Draw order is fixed (primary noise, then signal, then secondary data) so
    that configurations differing only in ``K_S`` share their primary data
    on the same stream.
    """
    if truth not in (H0, H1):
        raise ValueError(f"truth must be H0 or H1, got {truth!r}")
    gen = as_generator(rng)
    sc = scene(cfg)
    Z_P = matcore.sample_colored_gaussian(sc.R_chol, cfg.K_P, gen)
    if truth == H1:
        if sinr_db is None:
            raise ValueError("sinr_db is required under H1")
        sig = draw_signal(cfg, sinr_db, gen)
        Z_P = Z_P + sc.steering_matrix(sig.phases) * sig.amplitudes
    else:
        sinr_db = None
    Z_S = matcore.sample_colored_gaussian(sc.secondary_chol, cfg.K_S, gen)
    return Dataset(Z_P, Z_S, truth, sinr_db)
