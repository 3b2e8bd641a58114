"""Dense complex linear-algebra kernels shared by the detectors.

Matrices are plain ``numpy`` arrays. Hermitian inputs are symmetrized on the
way in, since products such as ``Z @ Z.conj().T`` are only Hermitian up to
round-off.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import lapack

from .rng import as_generator

# minimum eigenvalue, relative to the largest, for a matrix to count as PD
PD_RTOL = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Hermitian matrix is singular or indefinite."""

    def __init__(self, message: str, *, min_eigenvalue: float | None = None,
                 pivot: int | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.pivot = pivot


class EigenConvergenceError(np.linalg.LinAlgError):
    def __init__(self, dim: int, condition: float):
        super().__init__(
            f"eigendecomposition did not converge (dim={dim}, "
            f"condition estimate={condition:.3e})"
        )
        self.dim = dim
        self.condition = condition


class EigenSystem(NamedTuple):
    values: np.ndarray  # real, ascending
    vectors: np.ndarray  # orthonormal columns


def hermitian(a) -> np.ndarray:
    """Return ``(A + A^H) / 2`` as a complex array, checking finiteness."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * (a + a.conj().T)


def hermitian_eig(a) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = hermitian(a)
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(a)) if a.size else 0.0
        raise EigenConvergenceError(a.shape[0], cond) from exc
    return EigenSystem(values, vectors)


def hermitian_eigvals(a) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix."""
    return np.linalg.eigvalsh(hermitian(a))


def inv_sqrt(a) -> np.ndarray:
    """Inverse principal square root ``V diag(lambda^-1/2) V^H`` of an HPD matrix.

    Raises
    ------
    NotPositiveDefiniteError
        If the smallest eigenvalue is not above ``PD_RTOL`` times the largest.
    """
    values, vectors = hermitian_eig(a)
    lo, hi = values[0], values[-1]
    if hi <= 0 or lo <= PD_RTOL * hi:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite: smallest eigenvalue {lo:.6g} "
            f"(largest {hi:.6g})",
            min_eigenvalue=float(lo),
        )
    b = (vectors / np.sqrt(values)) @ vectors.conj().T
    return 0.5 * (b + b.conj().T)


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor with positive real diagonal, ``L L^H = A``."""
    a = hermitian(a)
    if a.shape[0] == 0:
        return a.copy()
    c, info = lapack.zpotrf(a, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite: Cholesky failed at pivot {info - 1}",
            pivot=info - 1,
        )
    if info < 0:  # pragma: no cover - argument error inside LAPACK
        raise ValueError(f"zpotrf illegal argument {-info}")
    return c


def logdet_hpd(a) -> float:
    """``log det A`` for a Hermitian positive definite matrix."""
    c = cholesky(a)
    return float(2.0 * np.sum(np.log(np.diagonal(c).real)))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex normal draws with unit variance per entry."""
    draws = rng.standard_normal((*shape, 2))
    return (draws[..., 0] + 1j * draws[..., 1]) * np.sqrt(0.5)


def sample_colored_gaussian(chol_factor, cols: int, rng) -> np.ndarray:
    """Return ``L @ W`` with ``W`` an ``N x cols`` matrix of CN(0, 1) entries.

    ``rng`` is a ``numpy.random.Generator`` or anything with a
    ``generator()`` method (such as :class:`~adaptive_subspace.rng.RngStream`).
    """
    chol_factor = np.asarray(chol_factor, dtype=complex)
    w = complex_normal(as_generator(rng), (chol_factor.shape[1], cols))
    return chol_factor @ w


def column_gram(z) -> np.ndarray:
    """``Z Z^H`` whose value does not depend on the column order of ``Z``.

    Each entry is a sum over columns; the per-column products are sorted
    before summation so that permuting the columns gives a bit-identical
    result (a BLAS product only agrees to rounding).
    """
    # fixed C layout throughout: numpy picks its reduction order from strides
    z = np.ascontiguousarray(z, dtype=complex)
    prod = np.ascontiguousarray(z[:, None, :] * z.conj()[None, :, :])
    re = np.sort(np.ascontiguousarray(prod.real), axis=-1).sum(axis=-1)
    im = np.sort(np.ascontiguousarray(prod.imag), axis=-1).sum(axis=-1)
    return re + 1j * im
