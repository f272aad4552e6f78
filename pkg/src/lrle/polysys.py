"""Polynomial system whose solutions are LRLE witnesses with closure dimension ``n``.

Unknowns are an orthonormal basis ``S^k`` of a traceless subspace, the
expansion coefficients ``a_i^{k,l}`` of ``A~_i^dagger S^k A~_i`` in that
basis, coordinates ``v^k, w^k`` of ``V`` and ``W``, the witness vectors
``x, y`` and the rotation ``U`` (with ``A~_i = sum_j U_ij A_j``).

Complex conjugation is removed by giving every variable an independent
partner with suffix ``c`` and adding the conjugate of each equation that is
not already its own conjugate. Over the reals the partner equals the complex
conjugate, so any genuine witness solves the system; an algebraic solver
sees a plain polynomial ideal over ``C``.

Beyond the closure, tracelessness, membership and unitarity blocks, the
system fixes ``(x|x) = (y|y) = 1`` and ``(y|x) = 0``; without these the
zero vector would be a spurious solution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping

import numpy as np

from lrle.criterion import OperatorSubspace, Witness
from lrle.errors import DimensionError
from lrle.mps import MPSTensor, rotate_physical_basis

Monomial = tuple[tuple[int, int], ...]  # sorted (variable index, exponent) pairs
Polynomial = dict[Monomial, complex]


@dataclass(frozen=True, eq=False)
class PolynomialSystem:
    """``variables`` lists the complex unknowns; index ``2j`` is a variable and
    ``2j + 1`` its conjugate partner in ``names``."""

    d: int
    D: int
    n: int
    variables: tuple[str, ...]
    polynomials: tuple[Polynomial, ...]
    blocks: tuple[tuple[str, int], ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s for v in self.variables for s in (v, v + "c"))

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_equations(self) -> int:
        return len(self.polynomials)


def variable_count(d: int, D: int, n: int) -> int:
    return n * D * D + d * n * n + 2 * n + 2 * D + d * d


def equation_count(d: int, D: int, n: int) -> int:
    """Closure ``2 d n D^2``, orthonormality ``n^2``, trace ``2n``,
    membership ``4 D^2``, unitarity ``d^2`` and witness normalisation 4."""
    return 2 * d * n * D * D + n * n + 2 * n + 4 * D * D + d * d + 4


class _Builder:
    def __init__(self, d: int, D: int, n: int):
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        r = range(1, D + 1)
        for k in range(1, n + 1):
            for a in r:
                for b in r:
                    self._add(f"S{k}_{a}_{b}")
        for i in range(1, d + 1):
            for k in range(1, n + 1):
                for l in range(1, n + 1):
                    self._add(f"a_{i}_{k}_{l}")
        for k in range(1, n + 1):
            self._add(f"v_{k}")
        for k in range(1, n + 1):
            self._add(f"w_{k}")
        for a in r:
            self._add(f"x_{a}")
        for a in r:
            self._add(f"y_{a}")
        for i in range(1, d + 1):
            for j in range(1, d + 1):
                self._add(f"U_{i}_{j}")

    def _add(self, name: str) -> None:
        self.index[name] = 2 * len(self.names)
        self.names.append(name)

    def var(self, name: str, conj: bool = False) -> int:
        return self.index[name] + int(conj)


def _mono(*idx: int) -> Monomial:
    counts: dict[int, int] = {}
    for i in idx:
        counts[i] = counts.get(i, 0) + 1
    return tuple(sorted(counts.items()))


def _add_term(poly: Polynomial, mono: Monomial, coeff: complex) -> None:
    if coeff == 0:
        return
    poly[mono] = poly.get(mono, 0) + coeff


def conjugate(poly: Polynomial) -> Polynomial:
    """Swap each variable with its partner and conjugate the coefficients."""
    out: Polynomial = {}
    for mono, c in poly.items():
        out[tuple(sorted((i ^ 1, e) for i, e in mono))] = complex(c).conjugate()
    return out


def _same(p: Polynomial, q: Polynomial) -> bool:
    return p.keys() == q.keys() and all(p[m] == q[m] for m in p)


def build_system(tensor: MPSTensor, n: int) -> PolynomialSystem:
    A = tensor.matrices
    d, D, _ = A.shape
    if D < 2:
        raise DimensionError("bond dimension 1 has no traceless subspace")
    if not 1 <= n <= D * D - 1:
        raise DimensionError(f"n must lie in [1, {D * D - 1}], got {n}")
    B = _Builder(d, D, n)
    v = B.var
    r = range(1, D + 1)
    polys: list[Polynomial] = []
    blocks: list[tuple[str, int]] = []

    def emit(block: str, base: Iterable[Polynomial]) -> None:
        count = 0
        for p in base:
            pc = conjugate(p)
            polys.append(p)
            count += 1
            if not _same(p, pc):
                polys.append(pc)
                count += 1
        blocks.append((block, count))

    # I: (A~_i^dagger S^k A~_i)_{ab} = sum_l a_i^{kl} S^l_{ab}
    # with A~_i^dagger = sum_j conj(U_ij) A_j^dagger
    def closure():
        for i in range(1, d + 1):
            for k in range(1, n + 1):
                for a in r:
                    for b in r:
                        p: Polynomial = {}
                        for j in range(d):
                            for jp in range(d):
                                uu = (v(f"U_{i}_{j + 1}", True), v(f"U_{i}_{jp + 1}"))
                                for pi in range(D):
                                    cl = np.conj(A[j, pi, a - 1])
                                    if cl == 0:
                                        continue
                                    for qi in range(D):
                                        cr = A[jp, qi, b - 1]
                                        if cr == 0:
                                            continue
                                        _add_term(p, _mono(*uu, v(f"S{k}_{pi + 1}_{qi + 1}")), complex(cl * cr))
                        for l in range(1, n + 1):
                            _add_term(p, _mono(v(f"a_{i}_{k}_{l}"), v(f"S{l}_{a}_{b}")), -1)
                        yield p

    def orthonormal():
        for k in range(1, n + 1):
            for l in range(k, n + 1):
                p: Polynomial = {}
                for a in r:
                    for b in r:
                        _add_term(p, _mono(v(f"S{k}_{a}_{b}", True), v(f"S{l}_{a}_{b}")), 1)
                if k == l:
                    _add_term(p, (), -1)
                yield p

    def traceless():
        for k in range(1, n + 1):
            yield {_mono(v(f"S{k}_{a}_{a}")): 1 for a in r}

    def membership():
        for a in r:
            for b in r:
                p: Polynomial = {}
                for k in range(1, n + 1):
                    _add_term(p, _mono(v(f"v_{k}"), v(f"S{k}_{a}_{b}")), 1)
                _add_term(p, _mono(v(f"x_{a}"), v(f"x_{b}", True)), -1)
                _add_term(p, _mono(v(f"y_{a}"), v(f"y_{b}", True)), 1)
                yield p
        for a in r:
            for b in r:
                p = {}
                for k in range(1, n + 1):
                    _add_term(p, _mono(v(f"w_{k}"), v(f"S{k}_{a}_{b}")), 1)
                _add_term(p, _mono(v(f"x_{a}"), v(f"y_{b}", True)), -1)
                yield p

    def unitarity():
        for i in range(1, d + 1):
            for k in range(i, d + 1):
                p: Polynomial = {}
                for j in range(1, d + 1):
                    _add_term(p, _mono(v(f"U_{i}_{j}"), v(f"U_{k}_{j}", True)), 1)
                if i == k:
                    _add_term(p, (), -1)
                yield p

    def witness_norm():
        for s in ("x", "y"):
            p: Polynomial = {_mono(v(f"{s}_{a}", True), v(f"{s}_{a}")): 1 for a in r}
            _add_term(p, (), -1)
            yield p
        yield {_mono(v(f"y_{a}", True), v(f"x_{a}")): 1 for a in r}

    emit("closure", closure())
    emit("orthonormal", orthonormal())
    emit("traceless", traceless())
    emit("membership", membership())
    emit("unitarity", unitarity())
    emit("witness_normalization", witness_norm())
    return PolynomialSystem(d, D, n, tuple(B.names), tuple(polys), tuple(blocks))


# --------------------------------------------------------------------------
# numeric evaluation


def witness_assignment(
    tensor: MPSTensor, witness: Witness, subspace: OperatorSubspace
) -> dict[str, complex]:
    """Values of every unknown (not the partners) at a witness and an
    orthonormal basis of its closed subspace."""
    At = rotate_physical_basis(tensor, witness.rotation).matrices
    S = subspace.basis
    n, D = S.shape[0], S.shape[1]
    d = At.shape[0]
    vals: dict[str, complex] = {}
    for k in range(n):
        for a in range(D):
            for b in range(D):
                vals[f"S{k + 1}_{a + 1}_{b + 1}"] = complex(S[k, a, b])
    for i in range(d):
        for k in range(n):
            img = At[i].conj().T @ S[k] @ At[i]
            for l in range(n):
                vals[f"a_{i + 1}_{k + 1}_{l + 1}"] = complex(np.vdot(S[l], img))
    for k in range(n):
        vals[f"v_{k + 1}"] = complex(np.vdot(S[k], witness.V))
        vals[f"w_{k + 1}"] = complex(np.vdot(S[k], witness.W))
    for a in range(D):
        vals[f"x_{a + 1}"] = complex(witness.x[a])
        vals[f"y_{a + 1}"] = complex(witness.y[a])
    U = witness.rotation.U
    for i in range(d):
        for j in range(d):
            vals[f"U_{i + 1}_{j + 1}"] = complex(U[i, j])
    return vals


def _value_vector(system: PolynomialSystem, values: Mapping[str, complex]) -> np.ndarray:
    z = np.empty(2 * system.n_variables, dtype=complex)
    for j, name in enumerate(system.variables):
        z[2 * j] = values[name]
        z[2 * j + 1] = values.get(name + "c", np.conj(values[name]))
    return z


def evaluate_polynomial(poly: Polynomial, z: np.ndarray) -> complex:
    total = 0j
    for mono, c in poly.items():
        t = c
        for i, e in mono:
            t = t * z[i] ** e
        total += t
    return total


def evaluate(system: PolynomialSystem, values: Mapping[str, complex]) -> np.ndarray:
    """Residual of every polynomial; partners default to conjugates."""
    z = _value_vector(system, values)
    return np.array([evaluate_polynomial(p, z) for p in system.polynomials])


# --------------------------------------------------------------------------
# text export and parsing


def _fmt(c: complex) -> str:
    re_, im = float(c.real) + 0.0, float(c.imag) + 0.0
    im_s = repr(im)
    if not im_s.startswith("-"):
        im_s = "+" + im_s
    return f"({re_!r}{im_s}*I)"


def _term(mono: Monomial, c: complex, names: tuple[str, ...]) -> str:
    parts = [_fmt(c)]
    for i, e in mono:
        parts.append(names[i] if e == 1 else f"{names[i]}^{e}")
    return "*".join(parts)


def _poly_text(poly: Polynomial, names: tuple[str, ...]) -> str:
    terms = [_term(m, poly[m], names) for m in sorted(poly) if poly[m] != 0]
    return " + ".join(terms) if terms else "(0.0+0.0*I)"


def export_text(system: PolynomialSystem, format: Literal["plain", "cas_generic"] = "plain") -> str:
    names = system.names
    lines = [_poly_text(p, names) for p in system.polynomials]
    if format == "plain":
        header = [
            f"# d={system.d} D={system.D} n={system.n}",
            f"# variables={system.n_variables} equations={system.n_equations}",
            "# blocks " + " ".join(f"{b}={c}" for b, c in system.blocks),
        ]
        return "\n".join(header + lines) + "\n"
    if format == "cas_generic":
        out = [f"/* d={system.d} D={system.D} n={system.n} */", "vars = ["]
        out.append(",\n".join("  " + s for s in names))
        out.append("];")
        out.append("eqs = [")
        out.append(",\n".join("  " + s for s in lines))
        out.append("];")
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown format {format!r}")


_COEFF = re.compile(r"^\(([^()]+?)([+-][^()+]*?)\*I\)$")


def parse_plain(text: str) -> tuple[list[str], list[Polynomial]]:
    """Parse ``plain`` output back into polynomials over the names that occur.

    Returns the variable names in first-seen order and the polynomials, with
    monomial indices referring to that list.
    """
    names: list[str] = []
    index: dict[str, int] = {}
    polys: list[Polynomial] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        poly: Polynomial = {}
        for term in line.split(" + "):
            head, _, rest = term.partition(")")
            m = _COEFF.match(head + ")")
            if m is None:
                raise ValueError(f"malformed coefficient in {term!r}")
            coeff = complex(float(m.group(1)), float(m.group(2)))
            idx = []
            for factor in filter(None, rest.split("*")):
                name, _, exp = factor.partition("^")
                if name not in index:
                    index[name] = len(names)
                    names.append(name)
                idx.extend([index[name]] * (int(exp) if exp else 1))
            _add_term(poly, _mono(*idx), coeff)
        polys.append(poly)
    return names, polys


def evaluate_parsed(names: list[str], polys: list[Polynomial], values: Mapping[str, complex]) -> np.ndarray:
    z = np.empty(len(names), dtype=complex)
    for j, name in enumerate(names):
        if name in values:
            z[j] = values[name]
        elif name.endswith("c") and name[:-1] in values:
            z[j] = np.conj(values[name[:-1]])
        else:
            raise KeyError(name)
    return np.array([evaluate_polynomial(p, z) for p in polys])
