"""Constructors for reference tensors with known LRLE status."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.linalg import block_diag

from lrle._linalg import random_unitary
from lrle.criterion import Witness
from lrle.errors import NonUnitary, NormalizationViolation, WrongShape
from lrle.io import encode_complex, isometry_to_dict, witness_to_dict
from lrle.mps import BasisRotation, BoundaryIsometry, MPSTensor, canonicalize, forward_residual

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
PAULIS = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    tensor: MPSTensor
    expected_lrle: Literal["yes", "no", "unknown"]
    provenance: str
    suggested_P: BoundaryIsometry | None = None
    suggested_Q: BoundaryIsometry | None = None
    witness: Witness | None = None

    def sidecar(self) -> dict:
        out: dict = {"expected_lrle": self.expected_lrle, "provenance": self.provenance}
        out["witness"] = witness_to_dict(self.witness) if self.witness is not None else None
        if self.suggested_P is not None:
            out["suggested_P"] = isometry_to_dict(self.suggested_P)
        if self.suggested_Q is not None:
            out["suggested_Q"] = isometry_to_dict(self.suggested_Q)
        return out


def _alternating_q(D: int) -> BoundaryIsometry:
    # Q = D^{-1/2} sum_j (|j)(up| + (-1)^j |j)(down|), j counted from 1
    signs = np.array([(-1) ** j for j in range(1, D + 1)], dtype=float)
    return BoundaryIsometry(np.column_stack([np.ones(D), signs]) / np.sqrt(D))


def _is_unitary(U: np.ndarray, tol: float) -> bool:
    return np.linalg.norm(U @ U.conj().T - np.eye(U.shape[0])) <= tol


def make_example1(
    q: int,
    n: int,
    permutations: Sequence[np.ndarray],
    alphas: np.ndarray,
    unitaries: np.ndarray,
    tol: float = 1e-10,
) -> CatalogEntry:
    """``A_i = (P_i (x) 1_n) . (+)_k alpha_i^k U_i^k`` with ``D = n q``.

    ``permutations`` holds ``d`` permutation matrices (``q x q``),
    ``alphas`` has shape ``(d, q)`` and ``unitaries`` ``(d, q, n, n)``.
    Besides ``sum_i (alpha_i^k)^2 = 1`` the permuted column sums must also be
    one, otherwise ``E(1) != 1``.
    """
    alphas = np.asarray(alphas, dtype=float)
    unitaries = np.asarray(unitaries, dtype=complex)
    perms = np.asarray(permutations, dtype=float)
    d = alphas.shape[0]
    if alphas.shape != (d, q) or unitaries.shape != (d, q, n, n) or perms.shape != (d, q, q):
        raise WrongShape("inconsistent shapes for permutations, alphas and unitaries")
    if np.any(alphas < 0):
        raise NormalizationViolation("alphas must be nonnegative")
    if np.any(np.abs((alphas**2).sum(axis=0) - 1) > tol):
        raise NormalizationViolation("sum_i (alpha_i^k)^2 must equal 1 for every block k")
    for Pm in perms:
        if not (np.all((Pm == 0) | (Pm == 1)) and np.all(Pm.sum(0) == 1) and np.all(Pm.sum(1) == 1)):
            raise WrongShape("not a permutation matrix")
    for U in unitaries.reshape(-1, n, n):
        if not _is_unitary(U, 1e-8):
            raise NonUnitary("block is not unitary")
    A = np.array([
        np.kron(perms[i], np.eye(n)) @ block_diag(*[alphas[i, k] * unitaries[i, k] for k in range(q)])
        for i in range(d)
    ])
    tensor = MPSTensor(A)
    if forward_residual(tensor) > 1e-9:
        raise NormalizationViolation("permuted block weights do not sum to one; E(1) != 1")
    D = n * q
    P = Q = witness = None
    if n == 2:
        P = BoundaryIsometry.embed(D)
        Q = _alternating_q(D)
        witness = Witness.standard(d, D)
    return CatalogEntry(tensor, "yes", f"example1(q={q}, n={n})", P, Q, witness)


def make_example1_random(q: int = 2, n: int = 2, d: int = 2, seed: int = 0) -> CatalogEntry:
    """Example 1 with random permutations and unitaries; ``alpha_i^k`` is
    taken independent of ``k`` so both normalisations hold."""
    rng = np.random.default_rng(seed)
    perms = [np.eye(q)[rng.permutation(q)] for _ in range(d)]
    a = np.abs(rng.standard_normal(d)) + 0.1
    a /= np.linalg.norm(a)
    alphas = np.repeat(a[:, None], q, axis=1)
    unitaries = np.array([[random_unitary(n, rng) for _ in range(q)] for _ in range(d)])
    return make_example1(q, n, perms, alphas, unitaries)


def make_example2() -> CatalogEntry:
    s = 1 / np.sqrt(2)
    A = np.array([
        [[0.5, 0, 0], [0, 0.5, 0], [0.5, 0, 0]],
        [[0, 0, s], [0, s, 0], [0, 0, -s]],
        [[0, 0.5, 0], [0.5, 0, 0], [0, 0.5, 0]],
    ])
    P = BoundaryIsometry.embed(3)
    Q = BoundaryIsometry(np.column_stack([np.ones(3) / np.sqrt(3), np.array([0, 1, -1]) / np.sqrt(2)]))
    return CatalogEntry(MPSTensor(A), "yes", "example2", P, Q, Witness.standard(3, 3))


def make_ghz() -> CatalogEntry:
    A = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    P = BoundaryIsometry.embed(2)
    return CatalogEntry(MPSTensor(A), "yes", "ghz", P, P, Witness.standard(2, 2, HADAMARD))


def make_product() -> CatalogEntry:
    """Rank-one ``A_i = |i)(v|`` with ``v = (|1) + |2))/sqrt(2)``: the uniform product state."""
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    A = np.array([np.outer(np.eye(2)[i], v) for i in range(2)])
    P = BoundaryIsometry.embed(2)
    return CatalogEntry(MPSTensor(A), "no", "product", P, P, None)


def make_aklt() -> CatalogEntry:
    """``A_k = sigma_k / sqrt(3)`` over the three Pauli matrices."""
    P = BoundaryIsometry.embed(2)
    return CatalogEntry(MPSTensor(PAULIS / np.sqrt(3)), "yes", "aklt", P, P, Witness.standard(3, 2))


def make_unitary_family(d: int = 3, D: int = 3, seed: int = 0) -> CatalogEntry:
    """``A_i = alpha_i U_i`` with random unitaries and weights."""
    rng = np.random.default_rng(seed)
    a = np.abs(rng.standard_normal(d)) + 0.1
    a /= np.linalg.norm(a)
    A = np.array([a[i] * random_unitary(D, rng) for i in range(d)])
    P = BoundaryIsometry.embed(D)
    return CatalogEntry(MPSTensor(A), "yes", f"unitary(d={d}, D={D})", P, P, Witness.standard(d, D))


def make_d3_block(unitary_part: np.ndarray, B: np.ndarray, c: np.ndarray, tol: float = 1e-10) -> CatalogEntry:
    """``A_i = [[A2_i, 0], [B_i, c_i]]`` with ``A2_i`` proportional to a unitary.

    ``E(1) = 1`` requires ``sum A2 A2^dagger = 1``, ``sum A2_i B_i^dagger = 0``
    and ``sum (|B_i|^2 + |c_i|^2) = 1``.
    """
    A2 = np.asarray(unitary_part, dtype=complex)
    d = A2.shape[0]
    B = np.asarray(B, dtype=complex).reshape(d, 2)
    c = np.asarray(c, dtype=complex).reshape(d)
    if A2.shape != (d, 2, 2):
        raise WrongShape("unitary_part must have shape (d, 2, 2)")
    for M in A2:
        G = M @ M.conj().T
        if np.linalg.norm(G - np.trace(G).real / 2 * np.eye(2)) > 1e-8:
            raise NonUnitary("2x2 block is not proportional to a unitary")
    A = np.zeros((d, 3, 3), dtype=complex)
    A[:, :2, :2] = A2
    A[:, 2, :2] = B
    A[:, 2, 2] = c
    tensor = MPSTensor(A)
    if forward_residual(tensor) > tol:
        raise NormalizationViolation("block family violates E(1) = 1")
    P = BoundaryIsometry.embed(3)
    return CatalogEntry(tensor, "yes", "d3_block", P, P, Witness.standard(d, 3))


def make_d3_block_random(seed: int = 0, b_scale: float = 0.3) -> CatalogEntry:
    """Two-outcome block family with a nonzero lower-left row."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.3, 1.2)
    alpha = np.array([np.cos(theta), np.sin(theta)])
    U = [random_unitary(2, rng) for _ in range(2)]
    A2 = np.array([alpha[0] * U[0], alpha[1] * U[1]])
    B1 = b_scale * (rng.standard_normal(2) + 1j * rng.standard_normal(2)) / 2
    # enforce sum_i A2_i B_i^dagger = 0
    B2 = -(alpha[0] / alpha[1]) * B1 @ U[0].conj().T @ U[1]
    rest = 1 - np.linalg.norm(B1) ** 2 - np.linalg.norm(B2) ** 2
    if rest <= 0:
        raise NormalizationViolation("b_scale too large")
    phi = rng.uniform(0, np.pi / 2)
    c = np.sqrt(rest) * np.array([np.cos(phi), np.sin(phi) * 1j])
    return make_d3_block(A2, np.array([B1, B2]), c)


def _pattern_weights(theta: np.ndarray, tol: float) -> np.ndarray:
    """Nonnegative ``w`` with ``sum w = 1`` and ``sum w exp(i theta) = 0``,
    closest to uniform when the closest point is nonnegative."""
    from scipy.optimize import nnls

    d = theta.size
    C = np.vstack([np.ones(d), np.cos(theta), np.sin(theta)])
    b = np.array([1.0, 0.0, 0.0])
    w0 = np.full(d, 1.0 / d)
    w = w0 + np.linalg.pinv(C) @ (b - C @ w0)
    if np.all(w >= -tol):
        w = np.clip(w, 0.0, None)
    else:
        w, _ = nnls(C, b)
    if np.linalg.norm(C @ w - b) > tol:
        raise NormalizationViolation("no nonnegative weights make sum_i A_i A_i^dagger = 1 for these phases")
    return w


def make_permutation_phase(
    l: Sequence[int], m: Sequence[int], phases: np.ndarray | None = None, tol: float = 1e-10
) -> CatalogEntry:
    """``A_i = c_i [(e^{i phi_i}|1) + e^{i phi'_i}|3))(l_i| + e^{i phi''_i}|2)(m_i|]``.

    ``l`` and ``m`` are 1-based column indices per outcome with
    ``{l_i, m_i}`` equal to ``{1, 2}`` or ``{2, 3}`` (the planes
    ``span{|1),|2)}`` and ``span{|2),|3)}`` must map into each other);
    ``phases`` has shape ``(d, 3)``. The scales ``c_i`` are chosen so that
    ``sum_i A_i A_i^dagger = 1``.
    """
    l = np.atleast_1d(np.asarray(l, dtype=int))
    m = np.atleast_1d(np.asarray(m, dtype=int))
    d = l.size
    phases = np.zeros((d, 3)) if phases is None else np.asarray(phases, dtype=float).reshape(d, 3)
    for li, mi in zip(l, m):
        if {int(li), int(mi)} not in ({1, 2}, {2, 3}):
            raise WrongShape(f"(l, m) = ({li}, {mi}) does not preserve the invariant planes")
    w = _pattern_weights(phases[:, 0] - phases[:, 1], tol)
    A = np.zeros((d, 3, 3), dtype=complex)
    e = np.eye(3)
    for i in range(d):
        col = np.exp(1j * phases[i, 0]) * e[0] + np.exp(1j * phases[i, 1]) * e[2]
        A[i] = np.sqrt(w[i]) * (np.outer(col, e[l[i] - 1]) + np.exp(1j * phases[i, 2]) * np.outer(e[1], e[m[i] - 1]))
    tensor = MPSTensor(A)
    if forward_residual(tensor) > 1e-9:
        raise NormalizationViolation("permutation-phase family violates E(1) = 1")
    P = BoundaryIsometry.embed(3)
    return CatalogEntry(tensor, "yes", "permutation_phase", P, None, Witness.standard(d, 3))


def make_random_canonical(d: int, D: int, seed: int) -> CatalogEntry:
    """I.i.d. complex Gaussian entries, then :func:`canonicalize`."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, D, D)) + 1j * rng.standard_normal((d, D, D))
    cf = canonicalize(MPSTensor(A))
    P = BoundaryIsometry.embed(D) if D >= 2 else None
    return CatalogEntry(cf.tensor, "unknown", f"random(d={d}, D={D}, seed={seed})", P, P, None)


def perturbed(entry: CatalogEntry, scale: float, seed: int = 0) -> MPSTensor:
    """Add complex Gaussian noise of the given scale and re-canonicalise."""
    rng = np.random.default_rng(seed)
    A = entry.tensor.matrices
    noise = rng.standard_normal(A.shape) + 1j * rng.standard_normal(A.shape)
    return canonicalize(MPSTensor(A + scale * noise)).tensor


CATALOG: dict[str, Callable[..., CatalogEntry]] = {
    "example1": lambda seed=0: make_example1_random(2, 2, 2, seed),
    "example2": lambda seed=0: make_example2(),
    "ghz": lambda seed=0: make_ghz(),
    "product": lambda seed=0: make_product(),
    "aklt": lambda seed=0: make_aklt(),
    "unitary": lambda seed=0: make_unitary_family(3, 3, seed),
    "d3_block": lambda seed=0: make_d3_block_random(seed),
    "permutation_phase": lambda seed=0: make_permutation_phase(
        (1, 3, 2), (2, 2, 1), [(0, 0, 0), (0, np.pi, 0), (0, 0, 0)]
    ),
    "random": lambda seed=0: make_random_canonical(2, 3, seed),
}


def get_entry(name: str, seed: int = 0) -> CatalogEntry:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(seed=seed)
