"""Localizable entanglement between two boundary qubit ancillas.

For boundary isometries ``P, Q`` (``D x 2``) the quantity evaluated is

    raw_sum(N) = 2 * sum_{i_1..i_N} |det(P^dagger A_i1 ... A_iN Q)|

together with ``norm_sq = sum_i p_i`` where ``p_i`` is the squared Frobenius
norm of the same ``2 x 2`` block. ``raw_sum`` is the unnormalised determinant
sum; ``raw_sum / norm_sq`` is the average concurrence of the normalised state.

Enumeration proceeds breadth-first over a ``(branches, 2, D)`` frontier array
and splits into fixed-size prefix chunks once the frontier grows too large,
so memory stays bounded and partial sums are reduced in a fixed order.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from lrle._linalg import (
    isometry_from_params,
    isometry_to_params,
    polar_isometry,
    random_isometry,
    unitary_from_params,
)
from lrle.errors import BudgetExceeded, CriterionViolated
from lrle.mps import BasisRotation, BoundaryIsometry, MPSTensor, apply_forward, rotate_physical_basis

CHUNK_BRANCHES = 1 << 16
DEFAULT_MAX_BRANCHES = 10**8

CSV_HEADER = ("N", "raw_sum", "norm_sq", "normalized_le", "branches", "pruned_mass")


@dataclass(frozen=True)
class LEResult:
    N: int
    raw_sum: float
    norm_sq: float
    normalized_le: float
    branches_visited: int
    pruned_mass: float

    def as_row(self) -> tuple:
        return (self.N, self.raw_sum, self.norm_sq, self.normalized_le,
                self.branches_visited, self.pruned_mass)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MonteCarloResult:
    N: int
    estimate: float
    stderr: float
    normalized_estimate: float
    normalized_stderr: float
    norm_sq: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ProjectorChain:
    """Row-space isometries along one outcome branch.

    ``isometries[j]`` spans the row space of ``P^dagger A_i1 ... A_i(j+1)``
    (``D x 2``, or ``D x 1`` once the product drops to rank one).
    ``factors[j]`` is ``|det(P^{j-1 dagger} A_ij P^j)|`` and
    ``factor_singular_values[j]`` the singular values of that ``2 x 2`` block.
    ``gammas[j]`` is the Frobenius norm of the frontier over ``sqrt(2)``,
    which equals the proportionality factor whenever the frontier is
    proportional to an isometry.
    """

    outcome_sequence: tuple[int, ...]
    isometries: list[np.ndarray]
    gammas: list[float]
    factors: list[float]
    factor_singular_values: list[np.ndarray]
    alive: bool


@dataclass(frozen=True)
class DecayEstimate:
    s_star: int
    delta_star: float
    fit_rate: float
    fit_r2: float
    deltas: list[float] = field(default_factory=list)
    bound_rate: float = 0.0
    consistent: bool = True
    Ns: list[int] = field(default_factory=list)
    raw_sums: list[float] = field(default_factory=list)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _iso(M) -> np.ndarray:
    if isinstance(M, BoundaryIsometry):
        return M.M
    return np.asarray(M, dtype=complex)


def _matrices(tensor) -> np.ndarray:
    return tensor.matrices if isinstance(tensor, MPSTensor) else np.asarray(tensor, dtype=complex)


# --------------------------------------------------------------------------
# projector chains


def build_projector_chain(
    tensor: MPSTensor, P, outcomes: Sequence[int], rank_tol: float = 1e-12
) -> ProjectorChain:
    A = _matrices(tensor)
    prev = _iso(P)
    F = prev.conj().T
    isos, gammas, factors, svals = [], [], [], []
    alive = True
    for i in outcomes:
        F = F @ A[i]
        u, s, vh = np.linalg.svd(F, full_matrices=False)
        if s[0] <= np.finfo(float).tiny:
            alive = False
            break
        r = int(np.sum(s > rank_tol * s[0]))
        if r >= 2:
            # redefine by the left unitary so F = (u s u^dagger) P_j^dagger
            Pj = vh[:2].conj().T @ u.conj().T
        else:
            Pj = vh[:1].conj().T
        block = prev.conj().T @ A[i] @ Pj
        bs = np.linalg.svd(block, compute_uv=False)
        if block.shape == (2, 2):
            factors.append(float(abs(np.linalg.det(block))))
        else:
            factors.append(0.0)
        svals.append(np.pad(bs, (0, 2 - bs.size)))
        gammas.append(float(np.linalg.norm(F) / math.sqrt(2)))
        isos.append(Pj)
        prev = Pj
    return ProjectorChain(tuple(outcomes), isos, gammas, factors, svals, alive)


def check_factor_unitarity(
    tensor: MPSTensor, P, outcomes: Sequence[int], tol: float = 1e-8
) -> list[bool]:
    """Per step, whether the ``2 x 2`` factor block is proportional to a unitary."""
    if _matrices(tensor).shape[1] == 1:
        return [True] * len(outcomes)
    chain = build_projector_chain(tensor, P, outcomes)
    flags = [bool(abs(s[0] - s[1]) <= tol) for s in chain.factor_singular_values]
    # steps after the branch died are not defined; report them as failing
    return flags + [False] * (len(outcomes) - len(flags))


def factor_sums(tensor: MPSTensor, P, depth: int) -> np.ndarray:
    """``sum_i |det(P^{j-1 dagger} A_i P^j)|`` for every prefix of length < depth.

    Returned as a flat array over all prefixes of all lengths ``0..depth-1``.
    Each factor equals the product of the two singular values of
    ``P^{j-1 dagger} A_i`` since ``P^j`` spans its row space.
    """
    A = _matrices(tensor)
    d, D, _ = A.shape
    prev = _iso(P)[None]  # (B, D, 2)
    out = []
    for _ in range(depth):
        blocks = np.einsum("bak,iac->bikc", prev.conj(), A)  # (B, d, 2, D)
        u, s, vh = np.linalg.svd(blocks, full_matrices=False)
        out.append((s[..., 0] * s[..., 1]).sum(axis=1))
        prev = vh[..., :2, :].conj().swapaxes(-1, -2).reshape(-1, D, 2)
    return np.concatenate(out)


# --------------------------------------------------------------------------
# exact enumeration


def _leaf_sums(F: np.ndarray, Q: np.ndarray) -> tuple[float, float]:
    M = F @ Q
    det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    return 2.0 * float(np.sum(np.abs(det))), float(np.sum(np.abs(M) ** 2))


class _Budget:
    def __init__(self, cap: int):
        self.cap = cap
        self.used = 0
        self._lock = threading.Lock()

    def spend(self, n: int):
        with self._lock:
            self.used += n
            over = self.used > self.cap
        if over:
            raise BudgetExceeded(f"enumeration exceeded {self.cap} branches")


def _enumerate(A, F, Q, steps, prune_eps, budget, pool):
    """Returns (raw, norm, leaves, pruned) for all continuations of ``F``."""
    d = A.shape[0]
    raw = norm = pruned = 0.0
    leaves = 0
    while steps > 0:
        if F.shape[0] * d > CHUNK_BRANCHES and F.shape[0] > 1:
            n_chunks = min(F.shape[0], -(-F.shape[0] * d // CHUNK_BRANCHES))
            chunks = np.array_split(F, n_chunks)
            args = [(A, c, Q, steps, prune_eps, budget, None) for c in chunks]
            if pool is not None:
                parts = list(pool.map(lambda a: _enumerate(*a), args))
            else:
                parts = [_enumerate(*a) for a in args]
            for r, n, l, p in parts:
                raw += r
                norm += n
                leaves += l
                pruned += p
            return raw, norm, leaves, pruned
        budget.spend(F.shape[0] * d)
        F = np.einsum("bka,iac->bikc", F, A).reshape(-1, F.shape[1], A.shape[2])
        w = np.einsum("bka,bka->b", F, F.conj()).real
        keep = w > 0.0
        if prune_eps > 0.0:
            drop = keep & (w < prune_eps)
            pruned += float(np.sum(w[drop]))
            keep &= ~drop
        if not np.all(keep):
            F = F[keep]
        steps -= 1
        if F.shape[0] == 0:
            return raw, norm, leaves, pruned
    r, n = _leaf_sums(F, Q)
    return raw + r, norm + n, leaves + F.shape[0], pruned


def le_fixed_basis(
    tensor: MPSTensor,
    P,
    Q,
    N: int,
    prune_eps: float = 0.0,
    max_branches: int = DEFAULT_MAX_BRANCHES,
    threads: int = 1,
) -> LEResult:
    """Exact determinant sum by branch enumeration.

    Branches whose frontier ``P^dagger A_i1 ... A_ij`` has squared Frobenius
    norm below ``prune_eps`` are dropped. Every descendant leaf of such a
    branch satisfies ``2|det M| <= ||M||_F^2`` and the descendants' norms sum
    to at most the frontier norm (``E(1) = 1``), so the frontier norm is added
    to ``pruned_mass`` as a bound on the neglected ``raw_sum``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    A = _matrices(tensor)
    Pm, Qm = _iso(P), _iso(Q)
    F = Pm.conj().T[None]
    budget = _Budget(max_branches)
    if prune_eps == 0.0 and A.shape[0] ** N > max_branches:
        raise BudgetExceeded(f"{A.shape[0]}^{N} branches exceed the cap {max_branches}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw, norm, leaves, pruned = _enumerate(A, F, Qm, N, prune_eps, budget, pool)
    else:
        raw, norm, leaves, pruned = _enumerate(A, F, Qm, N, prune_eps, budget, None)
    return LEResult(
        N=N,
        raw_sum=raw,
        norm_sq=norm,
        normalized_le=raw / norm if norm > 0 else 0.0,
        branches_visited=leaves,
        pruned_mass=pruned,
    )


def le_curve(tensor: MPSTensor, P, Q, Ns: Iterable[int], **kwargs) -> list[LEResult]:
    return [le_fixed_basis(tensor, P, Q, n, **kwargs) for n in Ns]


def curve_to_csv(results: Sequence[LEResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in r.as_row()])
    return buf.getvalue()


# --------------------------------------------------------------------------
# Monte Carlo


def le_monte_carlo(tensor: MPSTensor, P, Q, N: int, samples: int, seed: int = 0) -> MonteCarloResult:
    """Importance-sampled estimate of ``raw_sum``.

    Outcome sequences are drawn site by site from the exact Born
    distribution ``p_i / sum p``, using ``E^k(Q Q^dagger)`` for the
    marginals of the remaining sites. The per-sample weight ``2|det|/p_i`` is
    the concurrence of the post-measurement state, so the estimate of
    ``raw_sum`` is ``norm_sq`` times the sample mean of the concurrence.
    """
    A = _matrices(tensor)
    d, D, _ = A.shape
    Pm, Qm = _iso(P), _iso(Q)
    rng = np.random.default_rng(seed)
    R = [Qm @ Qm.conj().T]
    for _ in range(N):
        R.append(apply_forward(A, R[-1]))
    norm_sq = float(np.trace(Pm.conj().T @ R[N] @ Pm).real)
    if norm_sq <= 0.0:
        return MonteCarloResult(N, 0.0, 0.0, 0.0, 0.0, 0.0, samples, seed)
    F = np.broadcast_to(Pm.conj().T, (samples, 2, D)).copy()
    idx = np.arange(samples)
    for t in range(1, N + 1):
        cand = np.einsum("ska,iac->sikc", F, A)
        w = np.einsum("sikc,ce,sike->si", cand, R[N - t], cand.conj()).real
        w = np.clip(w, 0.0, None)
        cdf = np.cumsum(w, axis=1)
        u = rng.random(samples) * cdf[:, -1]
        choice = np.minimum((cdf < u[:, None]).sum(axis=1), d - 1)
        F = cand[idx, choice]
        F /= np.linalg.norm(F, axis=(1, 2))[:, None, None]
    M = F @ Qm
    det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    p = np.sum(np.abs(M) ** 2, axis=(1, 2))
    conc = np.where(p > 0, 2.0 * np.abs(det) / np.where(p > 0, p, 1.0), 0.0)
    mean = float(conc.mean())
    sd = float(conc.std(ddof=1)) if samples > 1 else 0.0
    se = sd / math.sqrt(samples)
    return MonteCarloResult(N, norm_sq * mean, norm_sq * se, mean, se, norm_sq, samples, seed)


# --------------------------------------------------------------------------
# optimisation over the measurement basis and the right boundary


def _raw_sum_fast(A: np.ndarray, Pm: np.ndarray, Qm: np.ndarray, N: int) -> float:
    F = Pm.conj().T[None]
    for _ in range(N):
        F = np.einsum("bka,iac->bikc", F, A).reshape(-1, 2, A.shape[2])
    return _leaf_sums(F, Qm)[0]


def optimize_basis(
    tensor: MPSTensor,
    P,
    Q,
    N: int,
    restarts: int = 16,
    seed: int = 0,
    max_branches: int = 10**6,
) -> tuple[BasisRotation, LEResult]:
    """Multi-start local ascent of ``raw_sum`` over ``U = exp(iH)``.

    Restart 0 starts at the identity, so the returned value is never below
    the input basis. This is a lower bound on the supremum, not a proof of
    optimality.
    """
    d = tensor.d
    Pm, Qm = _iso(P), _iso(Q)
    if d ** N > max_branches:
        raise BudgetExceeded(f"{d}^{N} branches exceed the cap {max_branches}")
    if d == 1:
        rot = BasisRotation.identity(1)
        return rot, le_fixed_basis(tensor, Pm, Qm, N)
    A = tensor.matrices
    rng = np.random.default_rng(seed)

    def neg(theta):
        U = unitary_from_params(theta, d)
        return -_raw_sum_fast(np.einsum("ij,jab->iab", U, A), Pm, Qm, N)

    best_val, best_theta = np.inf, np.zeros(d * d)
    for k in range(restarts):
        theta0 = np.zeros(d * d) if k == 0 else rng.normal(scale=1.5, size=d * d)
        res = minimize(neg, theta0, method="L-BFGS-B", options={"maxiter": 500})
        if res.fun < best_val - 1e-15:
            best_val, best_theta = float(res.fun), res.x
    rot = BasisRotation(unitary_from_params(best_theta, d))
    return rot, le_fixed_basis(rotate_physical_basis(tensor, rot), Pm, Qm, N)


def _terminal_frames(A: np.ndarray, Pm: np.ndarray, N: int):
    F = Pm.conj().T[None]
    for _ in range(N):
        F = np.einsum("bka,iac->bikc", F, A).reshape(-1, 2, A.shape[2])
    u, s, vh = np.linalg.svd(F, full_matrices=False)
    return s, vh[:, :2, :].conj().swapaxes(-1, -2)


def choose_q(
    tensor: MPSTensor,
    P,
    N: int,
    tol: float = 1e-6,
    merge_angle: float = 1e-3,
    polish: bool = True,
) -> BoundaryIsometry:
    """Right boundary isometry for a tensor satisfying the chain criterion.

    The terminal frames ``P^N`` of all branches are grouped by principal
    angle (``merge_angle``) and weighted by ``|gamma|^2``. The starting
    choice is the representative of the heaviest group, which already gives
    ``raw_sum >= 2 * max weight``; with ``polish`` the weighted objective
    ``sum_c w_c |det(V_c^dagger Q)|`` is then locally maximised from the
    heaviest representatives.
    """
    A = _matrices(tensor)
    D = A.shape[1]
    Pm = _iso(P)
    s, frames = _terminal_frames(A, Pm, N)
    weight = 0.5 * (s[:, 0] ** 2 + s[:, 1] ** 2)
    live = weight > 1e-28
    dev = np.abs(s[:, 0] ** 2 - s[:, 1] ** 2)
    bad = live & (dev > tol * 2 * weight + 1e-14)
    if np.any(bad):
        raise CriterionViolated(
            f"{int(bad.sum())} branches are not proportional to an isometry at depth {N}"
        )
    cos_merge = math.cos(merge_angle)
    reps: list[np.ndarray] = []
    wsum: list[float] = []
    for V, w in zip(frames[live], weight[live]):
        for c, R in enumerate(reps):
            if np.linalg.svd(R.conj().T @ V, compute_uv=False)[-1] >= cos_merge:
                wsum[c] += w
                break
        else:
            reps.append(V)
            wsum.append(float(w))
    if not reps:
        raise CriterionViolated("every branch vanishes; no right boundary can help")
    order = np.argsort(wsum)[::-1]
    reps_arr = np.array(reps)
    w_arr = np.array(wsum)

    def objective(Qm):
        dets = np.abs(np.linalg.det(np.einsum("cka,kb->cab", reps_arr.conj(), Qm)))
        return float(np.sum(w_arr * dets))

    best = reps[order[0]]
    best_val = objective(best)
    if polish and D > 2:
        for c in order[:8]:
            x0 = isometry_to_params(reps[c])
            res = minimize(lambda th: -objective(isometry_from_params(th, D)), x0, method="L-BFGS-B")
            if -res.fun > best_val + 1e-12:
                best_val, best = -res.fun, isometry_from_params(res.x, D)
    return BoundaryIsometry(polar_isometry(best))


# --------------------------------------------------------------------------
# decay estimate


def _products(A: np.ndarray, s: int) -> np.ndarray:
    out = A
    for _ in range(s - 1):
        out = np.einsum("bac,icd->biad", out, A).reshape(-1, A.shape[1], A.shape[2])
    return out


def _det_sum(prods: np.ndarray, Pm: np.ndarray) -> float:
    F = np.einsum("ka,bac->bkc", Pm.conj().T, prods)
    sv = np.linalg.svd(F, compute_uv=False)
    return float(np.sum(sv[:, 0] * sv[:, 1]))


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def estimate_decay(
    tensor: MPSTensor,
    s_max: int = 6,
    P_samples: int = 8,
    seed: int = 0,
    Ns: Sequence[int] = tuple(range(4, 13)),
    delta_tol: float = 1e-6,
    max_products: int = 10**6,
    zero_tol: float = 1e-12,
) -> DecayEstimate:
    """Per-block contraction ``Delta^(s)`` and a fitted decay rate.

    ``Delta^(s) = 1 - max_P sum |det(P^dagger A_i1..A_is P^s)|`` where the
    determinant equals the product of singular values of the ``2 x D``
    frontier. The maximum over ``P`` is approximated by local ascent from
    ``P_samples`` random isometries (plus the best ``P`` of the previous
    block length), so ``delta_star`` can only overestimate the true minimum.
    ``s_star = 0`` signals that no ``Delta^(s) > delta_tol`` was found.

    The fit regresses ``log raw_sum(N)`` on ``N`` using ``P = Q`` = the best
    isometry found. A curve that vanishes identically (every value below
    ``zero_tol``) is reported with ``fit_rate = -inf`` and ``fit_r2 = 1``.
    """
    A = tensor.matrices
    d, D, _ = A.shape
    rng = np.random.default_rng(seed)
    deltas: list[float] = []
    best_P = random_isometry(D, 2, rng)
    s_star, delta_star, P_star = 0, 0.0, None
    for s in range(1, s_max + 1):
        if d**s > max_products:
            raise BudgetExceeded(f"{d}^{s} products exceed the cap {max_products}")
        prods = _products(A, s)
        starts = [best_P] + [random_isometry(D, 2, rng) for _ in range(P_samples)]
        val, arg = -np.inf, best_P
        for P0 in starts:
            if D == 2:
                v, Pc = _det_sum(prods, P0), P0
            else:
                res = minimize(
                    lambda th: -_det_sum(prods, isometry_from_params(th, D)),
                    isometry_to_params(P0),
                    method="L-BFGS-B",
                    options={"maxiter": 400},
                )
                Pc = isometry_from_params(res.x, D)
                v = _det_sum(prods, Pc)
            if v > val:
                val, arg = v, Pc
        best_P = arg
        delta = float(min(max(1.0 - val, 0.0), 1.0))
        deltas.append(delta)
        if s_star == 0 and delta > delta_tol:
            s_star, delta_star, P_star = s, delta, arg
    if P_star is None:
        P_star = best_P
    Ns = list(Ns)
    raws = [le_fixed_basis(tensor, P_star, P_star, n).raw_sum for n in Ns]
    y = np.array(raws)
    if np.all(y <= zero_tol):
        fit_rate, r2 = -math.inf, 1.0
    else:
        pos = y > zero_tol
        fit_rate, r2 = _linear_fit(np.array(Ns, dtype=float)[pos], np.log(y[pos]))
    if s_star and delta_star > 0:
        bound = math.log(1.0 - delta_star) / s_star if delta_star < 1.0 else -math.inf
        consistent = fit_rate <= bound + 1e-3 if math.isfinite(bound) else fit_rate == -math.inf
    else:
        bound, consistent = 0.0, True
    return DecayEstimate(
        s_star=s_star,
        delta_star=delta_star,
        fit_rate=fit_rate,
        fit_r2=r2,
        deltas=deltas,
        bound_rate=bound,
        consistent=bool(consistent),
        Ns=Ns,
        raw_sums=raws,
        seed=seed,
    )
