"""Small dense linear-algebra helpers used across modules."""

from __future__ import annotations

import numpy as np


def hermitian_from_params(params: np.ndarray, n: int) -> np.ndarray:
    """Map ``n*n`` reals to an ``n x n`` Hermitian matrix.

    The first ``n`` entries fill the diagonal, the remaining ``n(n-1)`` fill
    the real and imaginary parts of the strict upper triangle.
    """
    params = np.asarray(params, dtype=float)
    H = np.diag(params[:n]).astype(complex)
    iu = np.triu_indices(n, k=1)
    m = len(iu[0])
    upper = params[n:n + m] + 1j * params[n + m:n + 2 * m]
    H[iu] = upper
    H[(iu[1], iu[0])] = upper.conj()
    return H


def unitary_from_params(params: np.ndarray, n: int) -> np.ndarray:
    """``exp(iH)`` for the Hermitian ``H`` encoded by ``params``."""
    w, v = np.linalg.eigh(hermitian_from_params(params, n))
    return (v * np.exp(1j * w)) @ v.conj().T


def polar_isometry(Z: np.ndarray) -> np.ndarray:
    """Closest isometry to ``Z`` (unitary polar factor)."""
    u, _, vh = np.linalg.svd(Z, full_matrices=False)
    return u @ vh


def isometry_from_params(params: np.ndarray, D: int, k: int = 2) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    Z = (params[:D * k] + 1j * params[D * k:2 * D * k]).reshape(D, k)
    return polar_isometry(Z)


def isometry_to_params(M: np.ndarray) -> np.ndarray:
    return np.concatenate([M.real.ravel(), M.imag.ravel()])


def null_space(M: np.ndarray, rtol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of ``M``."""
    _, s, vh = np.linalg.svd(M)
    scale = max(s[0], 1.0) if s.size else 1.0
    rank = int(np.sum(s > rtol * scale))
    return vh[rank:].conj().T


def hs_inner(X: np.ndarray, Y: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(X^dagger Y)."""
    return complex(np.vdot(X, Y))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(Z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_isometry(D: int, k: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((D, k)) + 1j * rng.standard_normal((D, k))
    q, _ = np.linalg.qr(Z)
    return q
