"""Two-party entanglement measures and the qudit-to-qubit ancilla bounds.

For a bipartite pure state with coefficient matrix ``Psi`` the concurrence
is ``2 |det Psi|`` (qubits) and the entanglement entropy is the Shannon
entropy of the squared Schmidt coefficients. The functions ``bound_w`` and
``bound_r`` and the constant ``f(D') = (D'/2) g(D')`` control how much
entropy a ``D' x D'`` ancilla pair can carry relative to the concurrence
of its best two-dimensional projection.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from lrle.errors import DomainError, NotNormalized, WrongShape

NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    psi: np.ndarray
    normalized: bool = True
    tol: float = NORM_TOL

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.ndim != 2:
            raise WrongShape("coefficient matrix must be two-dimensional")
        if self.normalized and abs(np.linalg.norm(psi) - 1) > self.tol:
            raise NotNormalized(f"Frobenius norm {np.linalg.norm(psi):.12g} != 1")
        object.__setattr__(self, "psi", psi)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))


@dataclass(frozen=True)
class BoundsReport:
    P1: float
    Dprime: int
    w_value: float
    r_value: float
    ratio: float
    f_value: float
    g_value: float


@dataclass(frozen=True)
class ProjectionBoundReport:
    Dprime: int
    samples: int
    seed: int
    f_value: float
    g_value: float
    violations: int
    max_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def _as_psi(psi) -> np.ndarray:
    if isinstance(psi, CoefficientMatrix):
        return psi.psi
    arr = np.asarray(psi, dtype=complex)
    if arr.ndim != 2:
        raise WrongShape("coefficient matrix must be two-dimensional")
    if abs(np.linalg.norm(arr) - 1) > NORM_TOL:
        raise NotNormalized(f"Frobenius norm {np.linalg.norm(arr):.12g} != 1")
    return arr


def binary_entropy(p) -> np.ndarray | float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    h = np.where((p == 0) | (p == 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


def concurrence(psi) -> float:
    """``2 |det Psi|`` for a normalised ``2 x 2`` coefficient matrix."""
    arr = _as_psi(psi)
    if arr.shape != (2, 2):
        raise WrongShape(f"concurrence needs a 2x2 matrix, got {arr.shape}")
    return float(min(1.0, 2 * abs(np.linalg.det(arr))))


def entanglement_entropy(psi) -> float:
    """Base-2 von Neumann entropy of ``Psi Psi^dagger``."""
    arr = _as_psi(psi)
    p = np.linalg.svd(arr, compute_uv=False) ** 2
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def entropy_from_concurrence(C) -> np.ndarray | float:
    """``h((1 + sqrt(1 - C^2)) / 2)``: two-qubit entropy as a function of concurrence."""
    C = np.clip(np.asarray(C, dtype=float), 0.0, 1.0)
    return binary_entropy((1 + np.sqrt(1 - C**2)) / 2)


def _check_domain(P1: float, Dprime: int) -> None:
    if Dprime < 2 or int(Dprime) != Dprime:
        raise DomainError("Dprime must be an integer >= 2")
    if not (1.0 / Dprime - 1e-15 <= P1 < 1.0):
        raise DomainError(f"P1 must lie in [1/Dprime, 1), got {P1}")


def bound_w(P1: float, Dprime: int) -> float:
    """Largest entropy of a ``Dprime``-outcome distribution with top weight ``P1``."""
    _check_domain(P1, Dprime)
    rest = 1 - P1
    return float(-P1 * np.log2(P1) - rest * np.log2(rest / (Dprime - 1)))


def bound_r(P1: float, Dprime: int) -> float:
    """Smallest entropy of the renormalised top pair ``(P1, P2)``.

    The minimum sits at ``P2 = (1 - P1) / (Dprime - 1)``.
    """
    _check_domain(P1, Dprime)
    a = P1 * (Dprime - 1)
    b = 1 - P1
    return float(binary_entropy(a / (a + b)))


@lru_cache(maxsize=None)
def g_value(Dprime: int, points: int = 10**5) -> float:
    """Supremum of ``w / r`` over a grid on ``[1/Dprime, 1)`` plus the ``P1 -> 1`` limit ``Dprime - 1``."""
    P = np.linspace(1.0 / Dprime, 1 - 1e-9, points)
    rest = 1 - P
    w = -P * np.log2(P) - rest * np.log2(rest / (Dprime - 1))
    a = P * (Dprime - 1)
    r = binary_entropy(a / (a + rest))
    return float(max(np.max(w / r), Dprime - 1))


def f_value(Dprime: int) -> float:
    return Dprime / 2 * g_value(Dprime)


def bounds_report(P1: float, Dprime: int) -> BoundsReport:
    w = bound_w(P1, Dprime)
    r = bound_r(P1, Dprime)
    return BoundsReport(P1, Dprime, w, r, w / r, f_value(Dprime), g_value(Dprime))


def check_projection_bound(Dprime: int, samples: int = 10**4, seed: int = 0) -> ProjectionBoundReport:
    """Sample unnormalised ``Dprime x Dprime`` pure states and test
    ``p E(Psi) <= f(Dprime) p~ C(Psi~)``, where ``Psi~`` keeps the two
    largest Schmidt components and ``p~`` is its weight."""
    if Dprime < 3:
        raise DomainError("Dprime must be at least 3")
    rng = np.random.default_rng(seed)
    f = f_value(Dprime)
    violations = 0
    worst = 0.0
    for _ in range(samples):
        X = rng.standard_normal((Dprime, Dprime)) + 1j * rng.standard_normal((Dprime, Dprime))
        X *= rng.uniform(0.1, 2.0)
        s2 = np.linalg.svd(X, compute_uv=False) ** 2
        p = s2.sum()
        q = s2 / p
        q = q[q > 0]
        E = -np.sum(q * np.log2(q))
        pt = s2[0] + s2[1]
        Ct = 2 * np.sqrt(s2[0] * s2[1]) / pt
        lhs, rhs = p * E, f * pt * Ct
        if lhs > rhs * (1 + 1e-12):
            violations += 1
        if pt * Ct > 0:
            worst = max(worst, lhs / (pt * Ct))
    return ProjectionBoundReport(Dprime, samples, seed, f, g_value(Dprime), violations, float(worst))
