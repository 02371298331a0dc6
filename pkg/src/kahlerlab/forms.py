"""Complex exterior forms by bidegree, the Kähler form and the form metric.

A :class:`PQForm` stores coefficients on the monomials
``dz^I ^ dzbar^J`` with ``I`` and ``J`` strictly increasing (1-based) and all
``dz`` factors written before all ``dzbar`` factors.

Two normalizations are fixed here once for the whole library:

* the form metric is the bilinear extension of ``g(dz^a, dzbar^b) = g^{b a}``
  (the inverse metric; ``delta`` in a unitary frame) by the determinant rule,
  with ``g(dz, dz) = g(dzbar, dzbar) = 0``;
* a Hermitian array ``X`` is turned into the (1,1)-form
  ``-i X_{cd} dz^c ^ dzbar^d``, the same rule that produces ``Omega`` from the
  metric. The curvature matrix and the coframe pairs of the transgression use it.

With these choices ``(1/m!) g(S(R), Omega^m) dnu = S(R)`` holds exactly and every
pairing of real forms is real.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


class BidegreeError(ValueError):
    """Raised for forms of incompatible bidegree or dimension."""


def _merge_sign(a: tuple, b: tuple) -> int:
    """Sign of sorting the concatenation of sorted tuples; 0 if they overlap."""
    if set(a) & set(b):
        return 0
    inversions = sum(1 for x in a for y in b if x > y)
    return -1 if inversions % 2 else 1


@dataclass(frozen=True)
class PQForm:
    """A form of bidegree ``(p, q)`` in complex dimension ``m``."""

    m: int
    p: int
    q: int
    coeffs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not (0 <= self.p <= self.m and 0 <= self.q <= self.m):
            raise BidegreeError(f"bidegree ({self.p},{self.q}) impossible for m={self.m}")
        for I, J in self.coeffs:
            if len(I) != self.p or len(J) != self.q:
                raise BidegreeError(f"key {(I, J)} does not have bidegree ({self.p},{self.q})")
            if list(I) != sorted(set(I)) or list(J) != sorted(set(J)):
                raise BidegreeError(f"key {(I, J)} is not strictly increasing")

    @classmethod
    def zero(cls, m: int, p: int, q: int) -> "PQForm":
        return cls(m, p, q, {})

    @classmethod
    def one(cls, m: int) -> "PQForm":
        return cls(m, 0, 0, {((), ()): 1.0 + 0j})

    @classmethod
    def dz(cls, m: int, a: int) -> "PQForm":
        return cls(m, 1, 0, {((a,), ()): 1.0 + 0j})

    @classmethod
    def dzbar(cls, m: int, b: int) -> "PQForm":
        return cls(m, 0, 1, {((), (b,)): 1.0 + 0j})

    @classmethod
    def from_hermitian(cls, X: np.ndarray) -> "PQForm":
        """The (1,1)-form ``-i sum X[c,d] dz^c ^ dzbar^d`` (1-based keys)."""
        X = np.asarray(X, dtype=complex)
        m = X.shape[0]
        coeffs = {((c + 1,), (d + 1,)): -1j * X[c, d] for c in range(m) for d in range(m) if X[c, d] != 0}
        return cls(m, 1, 1, coeffs)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in self.coeffs.values())

    def __add__(self, other: "PQForm") -> "PQForm":
        if (self.m, self.p, self.q) != (other.m, other.p, other.q):
            raise BidegreeError("cannot add forms of different bidegree")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0j) + v
        return PQForm(self.m, self.p, self.q, out)

    def __mul__(self, scalar) -> "PQForm":
        return PQForm(self.m, self.p, self.q, {k: v * scalar for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "PQForm":
        return self * -1

    def __sub__(self, other: "PQForm") -> "PQForm":
        return self + (-other)

    def conjugate(self) -> "PQForm":
        """Complex conjugate: ``conj(c) dzbar^I ^ dz^J`` rewritten in normal order."""
        sign = -1 if (self.p * self.q) % 2 else 1
        return PQForm(self.m, self.q, self.p, {(J, I): sign * np.conj(v) for (I, J), v in self.coeffs.items()})

    def max_abs_diff(self, other: "PQForm") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(k, 0j) - other.coeffs.get(k, 0j)) for k in keys), default=0.0)

    def top_coefficient(self) -> complex:
        """Coefficient of ``dz^{1..m} ^ dzbar^{1..m}`` for a top-degree form."""
        full = tuple(range(1, self.m + 1))
        if (self.p, self.q) != (self.m, self.m):
            raise BidegreeError("not a top-degree form")
        return self.coeffs.get((full, full), 0j)


def wedge(a: PQForm, b: PQForm) -> PQForm:
    """Exterior product; moving ``dz^{I_b}`` past ``dzbar^{J_a}`` costs ``(-1)^{q_a p_b}``."""
    if a.m != b.m:
        raise BidegreeError("dimension mismatch")
    m, p, q = a.m, a.p + b.p, a.q + b.q
    if p > m or q > m:
        return _overflow(m, p, q)
    cross = -1 if (a.q * b.p) % 2 else 1
    out: dict = {}
    for (I1, J1), v1 in a.coeffs.items():
        for (I2, J2), v2 in b.coeffs.items():
            s = _merge_sign(I1, I2)
            if s == 0:
                continue
            t = _merge_sign(J1, J2)
            if t == 0:
                continue
            key = (tuple(sorted(I1 + I2)), tuple(sorted(J1 + J2)))
            out[key] = out.get(key, 0j) + cross * s * t * v1 * v2
    return PQForm(m, p, q, out)


class _ZeroForm(PQForm):
    """Zero form whose bidegree exceeds the dimension (wedges past the top)."""

    def __init__(self, m: int, p: int, q: int):
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "coeffs", {})

    def __add__(self, other: PQForm) -> PQForm:
        if (self.m, self.p, self.q) != (other.m, other.p, other.q):
            raise BidegreeError("cannot add forms of different bidegree")
        return self

    def __mul__(self, scalar) -> PQForm:
        return self

    __rmul__ = __mul__


def _overflow(m: int, p: int, q: int) -> PQForm:
    return _ZeroForm(m, p, q)


def kahler_form(j) -> PQForm:
    """``Omega = -i g_{a bbar} dz^a ^ dzbar^b`` from the order-0 block of a jet table."""
    G = j.metric()
    if not np.allclose(G, G.conj().T, atol=1e-12):
        raise BidegreeError("order-0 block is not Hermitian")
    return PQForm.from_hermitian(G)


def omega_power(omega: PQForm, k: int) -> PQForm:
    """``Omega^k`` by repeated wedge; ``Omega^0 = 1``."""
    out = PQForm.one(omega.m)
    for _ in range(k):
        out = wedge(out, omega)
    return out


def volume_form(j) -> PQForm:
    """``dnu = Omega^m / m!``."""
    return omega_power(kahler_form(j), j.m) * (1.0 / math.factorial(j.m))


def _inverse_pairing(j, m: int) -> np.ndarray:
    """``P[a, b] = g(dz^a, dzbar^b)``: the transpose of the inverse metric."""
    if j is None:
        return np.eye(m, dtype=complex)
    G = j.metric()
    return np.linalg.inv(G).T


def form_inner_product(a: PQForm, b: PQForm, j=None) -> complex:
    """Bilinear determinant-rule pairing of two forms of the same bidegree.

    ``j`` supplies the metric; ``None`` means a unitary frame. A monomial
    ``dz^I ^ dzbar^J`` pairs with ``dz^K ^ dzbar^L`` through
    ``(-1)^{p q} det[g(dz^I, dzbar^L)] det[g(dzbar^J, dz^K)]``.
    """
    if (a.m, a.p, a.q) != (b.m, b.p, b.q):
        raise BidegreeError(f"bidegree mismatch ({a.p},{a.q}) vs ({b.p},{b.q})")
    if a.p != a.q:
        return 0j
    if isinstance(a, _ZeroForm) or isinstance(b, _ZeroForm):
        return 0j
    p = a.p
    sign = -1 if (p * p) % 2 else 1
    if j is None:
        total = 0j
        for (I, J), v in a.coeffs.items():
            w = b.coeffs.get((J, I))
            if w is not None:
                total += v * w
        return sign * total
    P = _inverse_pairing(j, a.m)
    total = 0j
    for (I, J), v in a.coeffs.items():
        rows_i = [i - 1 for i in I]
        rows_j = [i - 1 for i in J]
        for (K, L), w in b.coeffs.items():
            d1 = np.linalg.det(P[np.ix_(rows_i, [l - 1 for l in L])]) if p else 1.0
            d2 = np.linalg.det(P.T[np.ix_(rows_j, [k - 1 for k in K])]) if p else 1.0
            total += v * w * d1 * d2
    return sign * total


@dataclass(frozen=True)
class FormMatrix:
    """An m x m matrix whose entries are forms of a common bidegree."""

    m: int
    entries: tuple = field(repr=False)

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        if len(rows) != self.m or any(len(r) != self.m for r in rows):
            raise BidegreeError("form matrix must be m x m")
        object.__setattr__(self, "entries", rows)

    def __matmul__(self, other: "FormMatrix") -> "FormMatrix":
        m = self.m
        rows = []
        for i in range(m):
            row = []
            for k in range(m):
                acc = None
                for l in range(m):
                    term = wedge(self.entries[i][l], other.entries[l][k])
                    acc = term if acc is None else acc + term
                row.append(acc)
            rows.append(row)
        return FormMatrix(m, rows)

    def trace(self) -> PQForm:
        acc = self.entries[0][0]
        for i in range(1, self.m):
            acc = acc + self.entries[i][i]
        return acc


def curvature_form_matrix(K) -> FormMatrix:
    """Entry ``(p, q)`` is ``-i sum_{c,d} R[c][dbar][qbar][p] dz^c ^ dzbar^d``.

    The trace is ``-i`` times the Ricci-type contraction ``R[c][dbar][pbar][p]``.
    """
    R = np.asarray(K.R)
    m = R.shape[0]
    rows = [[PQForm.from_hermitian(R[:, :, q, p]) for q in range(m)] for p in range(m)]
    return FormMatrix(m, rows)
