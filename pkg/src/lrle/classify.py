"""Structural classification of LRLE tensors with bond dimension 2 and 3."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Any, Literal

import numpy as np
from scipy.optimize import least_squares

from lrle._linalg import unitary_from_params
from lrle.criterion import Witness, WitnessSearchResult, search_witness
from lrle.errors import WrongBondDimension
from lrle.mps import BasisRotation, MPSTensor

PROPORTIONALITY_TOL = 1e-9

D3Form = Literal["unitary_proportional", "block_2plus1", "permutation_phase", "none_found"]


@dataclass(frozen=True, eq=False)
class D2Classification:
    lrle: bool
    rotation: BasisRotation | None
    penalty: float
    search_agrees: bool | None = None


@dataclass(frozen=True, eq=False)
class D3Classification:
    form: D3Form
    details: dict[str, Any] = field(default_factory=dict)
    witness: Witness | None = None


def _gram_residuals(A: np.ndarray) -> np.ndarray:
    """Real residual vector whose norm is ``sqrt(sum_i ||A_i A_i^dagger - tr/D 1||_F^2)``."""
    D = A.shape[1]
    G = A @ A.conj().swapaxes(-1, -2)
    dev = G - np.einsum("iaa->i", G)[:, None, None] / D * np.eye(D)
    return np.concatenate([dev.real.ravel(), dev.imag.ravel()])


def fit_unitary_proportional(
    A: np.ndarray, restarts: int = 8, seed: int = 0
) -> tuple[np.ndarray, float]:
    """Rotation ``U`` minimising ``sum_i ||A~_i A~_i^dagger - tr/D 1||^2``.

    Restart 0 starts at the identity; the rest at random Hermitian generators.
    Returns the best ``U`` and its penalty.
    """
    d = A.shape[0]

    def fun(theta):
        U = unitary_from_params(theta, d)
        return _gram_residuals(np.einsum("ij,jab->iab", U, A))

    rng = np.random.default_rng(seed)
    best_U, best = np.eye(d, dtype=complex), float(np.sum(_gram_residuals(A) ** 2))
    if best < PROPORTIONALITY_TOL**2 or d == 1:
        return best_U, best
    for k in range(restarts):
        theta0 = np.zeros(d * d) if k == 0 else rng.normal(scale=1.5, size=d * d)
        res = least_squares(fun, theta0, method="trf", xtol=1e-12, ftol=1e-12, gtol=1e-12)
        val = float(2 * res.cost)
        if val < best:
            best, best_U = val, unitary_from_params(res.x, d)
        if best < PROPORTIONALITY_TOL**2:
            break
    return best_U, best


def classify_d2(tensor: MPSTensor, restarts: int = 8, seed: int = 0, cross_check: bool = True) -> D2Classification:
    """A ``D = 2`` tensor has LRLE iff some rotation makes every ``A~_i``
    proportional to a unitary."""
    if tensor.D != 2:
        raise WrongBondDimension(f"classify_d2 needs D = 2, got D = {tensor.D}")
    U, penalty = fit_unitary_proportional(tensor.matrices, restarts, seed)
    lrle = penalty < PROPORTIONALITY_TOL**2
    agrees = None
    if cross_check:
        found = search_witness(tensor, restarts=16, seed=seed)
        agrees = (found is not None) == lrle
    return D2Classification(lrle, BasisRotation(U) if lrle else None, penalty, agrees)


def _common_eigenvector(A: np.ndarray, tol: float, seed: int) -> np.ndarray | None:
    rng = np.random.default_rng(seed)
    r = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
    _, vecs = np.linalg.eig(np.einsum("i,iab->ab", r, A))
    for v in vecs.T:
        v = v / np.linalg.norm(v)
        Av = A @ v
        lam = Av @ v.conj()
        if np.linalg.norm(Av - lam[:, None] * v) < tol:
            return v
    return None


def _match_pattern(A: np.ndarray, tol: float) -> dict | None:
    """Read off ``A_i = c_i[(e^{i p}|1) + e^{i p'}|3))(l| + e^{i p''}|2)(m|]``."""
    l_idx, m_idx, phases, scales = [], [], [], []
    for M in A:
        mags = np.abs(M)
        cols = [j for j in range(3) if mags[:, j].max() > tol]
        l = [j for j in cols if mags[1, j] < tol and abs(mags[0, j] - mags[2, j]) < tol and mags[0, j] > tol]
        m = [j for j in cols if mags[0, j] < tol and mags[2, j] < tol]
        if len(cols) != 2 or len(l) != 1 or len(m) != 1 or l[0] == m[0]:
            return None
        li, mi = l[0], m[0]
        if abs(mags[0, li] - mags[1, mi]) > tol:
            return None
        l_idx.append(li + 1)
        m_idx.append(mi + 1)
        phases.append([float(np.angle(M[0, li])), float(np.angle(M[2, li])), float(np.angle(M[1, mi]))])
        scales.append(float(mags[0, li]))
    return {"l": l_idx, "m": m_idx, "phases": phases, "scales": scales}


def _align_pattern(A: np.ndarray, tol: float = 1e-8) -> dict | None:
    for perm in permutations(range(3)):
        B = np.eye(3)[:, list(perm)]
        pattern = _match_pattern(np.einsum("ba,ibc,cd->iad", B, A, B), tol)
        if pattern is not None:
            pattern["bond_permutation"] = [p + 1 for p in perm]
            return pattern
    return None


def classify_d3(
    tensor: MPSTensor, restarts: int = 64, seed: int = 0, threads: int = 1
) -> D3Classification:
    """Match a ``D = 3`` tensor to one of the known LRLE forms.

    Checks, in order: a rotation making every ``A~_i`` proportional to a
    unitary; a common eigenvector whose orthogonal 2-plane carries
    compressions that are (after rotation) proportional to unitaries; and
    finally a witness search, whose success leaves the permutation-phase
    form. For that form the pattern ``l, m`` and the phases are reported
    when a permutation of the bond basis brings the matrices into it.
    """
    if tensor.D != 3:
        raise WrongBondDimension(f"classify_d3 needs D = 3, got D = {tensor.D}")
    A = tensor.matrices
    U, penalty = fit_unitary_proportional(A, seed=seed)
    if penalty < PROPORTIONALITY_TOL**2:
        return D3Classification("unitary_proportional", {"rotation": U, "penalty": penalty})

    v = _common_eigenvector(A, 1e-8, seed)
    if v is not None:
        basis = np.linalg.svd(np.eye(3) - np.outer(v, v.conj()))[0][:, :2]
        C = np.einsum("ba,ibc,cd->iad", basis.conj(), A, basis)
        U2, pen2 = fit_unitary_proportional(C, seed=seed)
        if pen2 < PROPORTIONALITY_TOL**2:
            return D3Classification(
                "block_2plus1",
                {"plane": basis, "eigenvector": v, "rotation": U2, "penalty": pen2},
            )

    found: WitnessSearchResult | None = search_witness(tensor, restarts=restarts, seed=seed, threads=threads)
    if found is None:
        return D3Classification("none_found", {"restarts": restarts, "seed": seed})
    details = {"subspace_dim": found.subspace.n, "penalty": found.penalty, "pattern": _align_pattern(A)}
    return D3Classification("permutation_phase", details, found.witness)
