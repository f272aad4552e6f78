"""Translationally invariant MPS site tensors, canonical form and transfer maps.

A site tensor is a stack of ``d`` complex ``D x D`` matrices ``A[i]``. The
forward transfer map is ``E(X) = sum_i A_i X A_i^dagger`` and the reverse map
is ``Er(X) = sum_i A_i^dagger X A_i``; ``Er`` is the Hilbert-Schmidt adjoint of
``E``. With row-major vectorisation the forward map is the ``D^2 x D^2``
matrix ``T = sum_i A_i (x) conj(A_i)`` and the reverse map is ``T^dagger``.

Physical indices are 0-based throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from lrle._linalg import null_space
from lrle.errors import (
    DegenerateSpectrum,
    DomainError,
    NonInjectiveGauge,
    NonUnitary,
    NotIsometry,
    WrongShape,
)

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MPSTensor:
    """``d`` complex ``D x D`` matrices defining one MPS site.

    Attributes
    ----------
    matrices : np.ndarray
        Complex array of shape ``(d, D, D)``; ``matrices[i]`` is ``A_i``.
    """

    matrices: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrices, dtype=complex)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise WrongShape(f"expected (d, D, D) matrices, got shape {A.shape}")
        if A.shape[0] < 1 or A.shape[1] < 1:
            raise WrongShape("need d >= 1 and D >= 1")
        if not np.all(np.isfinite(A)):
            raise WrongShape("tensor entries must be finite")
        A.setflags(write=False)
        object.__setattr__(self, "matrices", A)

    @property
    def d(self) -> int:
        return self.matrices.shape[0]

    @property
    def D(self) -> int:
        return self.matrices.shape[1]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.matrices[i]

    def __len__(self) -> int:
        return self.d


@dataclass(frozen=True, eq=False)
class BasisRotation:
    """Unitary ``d x d`` change of the physical measurement basis."""

    U: np.ndarray
    tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        U = np.array(self.U, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise WrongShape(f"rotation must be square, got {U.shape}")
        err = np.linalg.norm(U @ U.conj().T - np.eye(U.shape[0]))
        if err > self.tol:
            raise NonUnitary(f"U U^dagger deviates from identity by {err:.3e}")
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    @classmethod
    def identity(cls, d: int) -> "BasisRotation":
        return cls(np.eye(d))


@dataclass(frozen=True, eq=False)
class BoundaryIsometry:
    """``D x 2`` isometry placing a qubit ancilla at one end of the chain."""

    M: np.ndarray
    tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        M = np.array(self.M, dtype=complex)
        if M.ndim != 2 or M.shape[1] != 2 or M.shape[0] < 2:
            raise WrongShape(f"boundary isometry must be D x 2 with D >= 2, got {M.shape}")
        err = np.linalg.norm(M.conj().T @ M - np.eye(2))
        if err > self.tol:
            raise NotIsometry(f"M^dagger M deviates from identity by {err:.3e}")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @property
    def D(self) -> int:
        return self.M.shape[0]

    @classmethod
    def from_vectors(cls, x: np.ndarray, y: np.ndarray) -> "BoundaryIsometry":
        """Isometry with ``P^dagger = |up)(x| + |down)(y|``."""
        return cls(np.column_stack([x, y]))

    @classmethod
    def embed(cls, D: int) -> "BoundaryIsometry":
        """The isometry onto the first two bond basis vectors."""
        return cls(np.eye(D, 2))


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """Result of :func:`canonicalize`.

    ``forward_unique`` is False when the leading transfer eigenvalue is
    degenerate but the input was already unital (so no gauge choice was
    needed); ``lambda_unique`` is False when the reverse map has a
    multi-dimensional fixed space and ``lambda_`` is one admissible choice.
    ``lambda_full_rank`` is False when ``lambda_`` has zero entries, i.e. the
    bond space carries a transient subspace (rank-one tensors, for instance).
    """

    tensor: MPSTensor
    lambda_: np.ndarray
    residual_forward: float
    residual_reverse: float
    scale: float
    forward_unique: bool = True
    lambda_unique: bool = True
    lambda_full_rank: bool = True


@dataclass(frozen=True)
class InjectivityResult:
    status: Literal["injective", "not_injective_up_to_L", "inconclusive"]
    L: int
    ranks: tuple[int, ...]


def _as_matrices(tensor: MPSTensor | np.ndarray) -> np.ndarray:
    if isinstance(tensor, MPSTensor):
        return tensor.matrices
    return np.asarray(tensor, dtype=complex)


def transfer_matrix(tensor: MPSTensor) -> np.ndarray:
    """Forward transfer map as a ``D^2 x D^2`` matrix (row-major vec)."""
    A = _as_matrices(tensor)
    d, D, _ = A.shape
    return np.einsum("iab,icd->acbd", A, A.conj()).reshape(D * D, D * D)


def apply_forward(tensor: MPSTensor, X: np.ndarray) -> np.ndarray:
    """``sum_i A_i X A_i^dagger``."""
    A = _as_matrices(tensor)
    return np.einsum("iab,bc,idc->ad", A, X, A.conj())


def apply_reverse(tensor: MPSTensor, X: np.ndarray) -> np.ndarray:
    """``sum_i A_i^dagger X A_i``."""
    A = _as_matrices(tensor)
    return np.einsum("iba,bc,icd->ad", A.conj(), X, A)


def apply_reverse_selective(tensor: MPSTensor, i: int, X: np.ndarray) -> np.ndarray:
    """Single-outcome reverse map ``A_i^dagger X A_i``."""
    A = _as_matrices(tensor)
    if not 0 <= i < A.shape[0]:
        raise IndexError(f"outcome index {i} out of range for d={A.shape[0]}")
    return A[i].conj().T @ X @ A[i]


def rotate_physical_basis(tensor: MPSTensor, rotation: BasisRotation | np.ndarray) -> MPSTensor:
    """``A~_i = sum_j U_ij A_j``; leaves the forward map unchanged."""
    if not isinstance(rotation, BasisRotation):
        rotation = BasisRotation(rotation)
    if rotation.U.shape[0] != tensor.d:
        raise WrongShape(f"rotation is {rotation.U.shape[0]}-dimensional, tensor has d={tensor.d}")
    return MPSTensor(np.einsum("ij,jab->iab", rotation.U, tensor.matrices))


def _spectral_fixed_point(M: np.ndarray, seed: np.ndarray, rtol: float) -> tuple[np.ndarray, int]:
    """Project ``seed`` onto the eigenvalue-1 eigenspace of ``M`` along the
    complementary invariant subspace. Returns the projection and the
    dimension of the fixed space."""
    n = M.shape[0]
    eye = np.eye(n)
    right = null_space(M - eye, rtol)
    left = null_space(M.conj().T - eye, rtol)
    k = min(right.shape[1], left.shape[1])
    if k == 0:
        raise NonInjectiveGauge("transfer map has no fixed point at the leading eigenvalue")
    right, left = right[:, :k], left[:, :k]
    coeff = np.linalg.solve(left.conj().T @ right, left.conj().T @ seed)
    return right @ coeff, k


def canonicalize(
    tensor: MPSTensor,
    tol: float = DEFAULT_TOL,
    degeneracy_tol: float = 1e-8,
    strict: bool = False,
) -> CanonicalForm:
    """Bring ``tensor`` to the gauge with ``E(1) = 1`` and ``Er(Lambda) = Lambda``.

    The tensor is rescaled by the spectral radius of the transfer matrix,
    gauged by the square root of the positive leading right fixed point and
    finally rotated by a unitary so that the reverse fixed point ``Lambda``
    (normalised to unit trace) is diagonal.

    Raises
    ------
    DegenerateSpectrum
        The leading eigenvalue magnitude is not isolated and the input is not
        already unital, so the gauge would be ambiguous.
    NonInjectiveGauge
        The forward fixed point is singular, or ``strict`` is set and the
        reverse fixed point is singular.
    """
    A = tensor.matrices
    D = tensor.D
    T = transfer_matrix(tensor)
    mags = np.sort(np.abs(np.linalg.eigvals(T)))[::-1]
    eta = float(mags[0])
    if eta <= np.finfo(float).tiny:
        raise NonInjectiveGauge("transfer matrix is nilpotent")
    degenerate = D * D > 1 and mags[1] >= eta * (1.0 - degeneracy_tol)
    scale = 1.0 / np.sqrt(eta)
    A = A * scale
    eye = np.eye(D)

    if np.linalg.norm(apply_forward(A, eye) - eye) > tol:
        if degenerate:
            raise DegenerateSpectrum(
                f"leading transfer eigenvalues {mags[0]:.12g} and {mags[1]:.12g} coincide"
            )
        R, _ = _spectral_fixed_point(transfer_matrix(A), eye.reshape(-1), 1e-9)
        R = R.reshape(D, D)
        R = R / np.trace(R)
        R = 0.5 * (R + R.conj().T)
        w, v = np.linalg.eigh(R)
        if w[0] <= tol * w[-1]:
            raise NonInjectiveGauge(f"forward fixed point is singular (min eigenvalue {w[0]:.3e})")
        X = (v * np.sqrt(w)) @ v.conj().T
        Xinv = (v / np.sqrt(w)) @ v.conj().T
        A = np.einsum("ab,ibc,cd->iad", Xinv, A, X)

    Trev = transfer_matrix(A).conj().T
    rho, k = _spectral_fixed_point(Trev, eye.reshape(-1) / D, 1e-9)
    rho = rho.reshape(D, D)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    offdiag = rho - np.diag(np.diag(rho))
    if np.linalg.norm(offdiag) <= tol:
        lam = np.diag(rho).real.copy()
    else:
        lam, W = np.linalg.eigh(rho)
        lam, W = lam[::-1], W[:, ::-1]
        A = np.einsum("ba,ibc,cd->iad", W.conj(), A, W)
    full_rank = bool(lam.min() > tol)
    if strict and not full_rank:
        raise NonInjectiveGauge(
            f"reverse fixed point is singular (min entry {lam.min():.3e}); "
            "the bond space has a transient subspace"
        )

    out = MPSTensor(A)
    L = np.diag(lam)
    return CanonicalForm(
        tensor=out,
        lambda_=lam,
        residual_forward=float(np.linalg.norm(apply_forward(out, eye) - eye)),
        residual_reverse=float(np.linalg.norm(apply_reverse(out, L) - L)),
        scale=float(scale),
        forward_unique=not degenerate,
        lambda_unique=k == 1,
        lambda_full_rank=full_rank,
    )


def forward_residual(tensor: MPSTensor) -> float:
    """``||E(1) - 1||_F``."""
    eye = np.eye(tensor.D)
    return float(np.linalg.norm(apply_forward(tensor, eye) - eye))


def check_injectivity(tensor: MPSTensor, L_max: int, tol: float = DEFAULT_TOL) -> InjectivityResult:
    """Grow ``span{A_i1 ... A_iL}`` one site at a time and track its rank."""
    A = tensor.matrices
    d, D, _ = A.shape
    full = D * D
    ranks: list[int] = []
    basis = A.reshape(d, full)
    for L in range(1, L_max + 1):
        if L > 1:
            prev = basis.reshape(-1, D, D)
            basis = np.einsum("iab,kbc->ikac", A, prev).reshape(-1, full)
        u, s, vh = np.linalg.svd(basis, full_matrices=False)
        r = int(np.sum(s > tol * max(s[0], tol))) if s.size else 0
        ranks.append(r)
        if r == full:
            return InjectivityResult("injective", L, tuple(ranks))
        basis = vh[:r]
    if len(ranks) >= 2 and ranks[-1] == ranks[-2]:
        return InjectivityResult("not_injective_up_to_L", L_max, tuple(ranks))
    return InjectivityResult("inconclusive", L_max, tuple(ranks))


def check_physical_symmetry(
    tensor: MPSTensor, phase_map: Sequence[complex], tol: float = 1e-8
) -> bool:
    """Whether ``|i> -> phase_map[i] |i>`` leaves the state invariant up to gauge.

    For a canonical tensor this holds iff the mixed transfer matrix
    ``sum_i phase_i A_i (x) conj(A_i)`` has an eigenvalue of modulus one.
    """
    phases = np.asarray(phase_map, dtype=complex)
    if phases.shape != (tensor.d,):
        raise WrongShape(f"need {tensor.d} phases, got {phases.shape}")
    if np.any(np.abs(np.abs(phases) - 1.0) > 1e-12):
        raise DomainError("phases must have unit modulus")
    A = tensor.matrices
    D = tensor.D
    Tm = np.einsum("i,iab,icd->acbd", phases, A, A.conj()).reshape(D * D, D * D)
    return bool(abs(np.max(np.abs(np.linalg.eigvals(Tm))) - 1.0) <= tol)
