"""The ring of conjugation-invariant polynomials ``C[Tr_1, ..., Tr_m]``.

Elements are stored in the partition basis: the partition ``(n_1, ..., n_l)``
stands for the monomial ``Tr_{n_1} ... Tr_{n_l}`` with ``Tr_n(B) = tr(B^n)``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .forms import FormMatrix, PQForm, _overflow, wedge


class InvariantError(ValueError):
    """Raised for malformed polynomials or out-of-range degrees."""


def _canon_partition(parts) -> tuple:
    parts = tuple(sorted((int(p) for p in parts), reverse=True))
    if any(p < 1 for p in parts):
        raise InvariantError(f"partition parts must be positive: {parts}")
    return parts


@lru_cache(maxsize=None)
def partitions(k: int) -> tuple:
    """All partitions of ``k`` as non-increasing tuples, in descending lexicographic order."""
    if k < 0:
        raise InvariantError("k must be non-negative")

    def gen(n, largest):
        if n == 0:
            yield ()
            return
        for first in range(min(n, largest), 0, -1):
            for rest in gen(n - first, first):
                yield (first,) + rest

    return tuple(gen(k, k))


def rho(k: int) -> int:
    """The partition function."""
    return len(partitions(k))


def dim_S(m: int, k: int) -> int:
    """Dimension of the degree-``k`` piece for ``m x m`` matrices: parts bounded by ``m``."""
    return sum(1 for p in partitions(k) if all(x <= m for x in p))


@dataclass(frozen=True)
class InvariantPolynomial:
    """A homogeneous element of degree ``k`` for ``m x m`` matrices."""

    m: int
    k: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean: dict = {}
        for parts, c in self.coeffs.items():
            parts = _canon_partition(parts)
            if sum(parts) != self.k:
                raise InvariantError(f"partition {parts} does not sum to {self.k}")
            if any(p > self.m for p in parts):
                raise InvariantError(f"part larger than m={self.m} in {parts}")
            clean[parts] = clean.get(parts, 0j) + complex(c)
        object.__setattr__(self, "coeffs", {p: c for p, c in sorted(clean.items(), reverse=True) if c != 0})

    @classmethod
    def monomial(cls, m: int, parts) -> "InvariantPolynomial":
        parts = _canon_partition(parts)
        return cls(m, sum(parts), {parts: 1.0})

    def __add__(self, other: "InvariantPolynomial") -> "InvariantPolynomial":
        if (self.m, self.k) != (other.m, other.k):
            raise InvariantError("degree or dimension mismatch")
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0j) + c
        return InvariantPolynomial(self.m, self.k, out)

    def __mul__(self, other):
        if isinstance(other, InvariantPolynomial):
            if self.m != other.m:
                raise InvariantError("dimension mismatch")
            out: dict = {}
            for p, c in self.coeffs.items():
                for q, d in other.coeffs.items():
                    key = _canon_partition(p + q)
                    out[key] = out.get(key, 0j) + c * d
            return InvariantPolynomial(self.m, self.k + other.k, out)
        return InvariantPolynomial(self.m, self.k, {p: c * other for p, c in self.coeffs.items()})

    __rmul__ = __mul__

    def is_real(self) -> bool:
        return all(c.imag == 0 for c in self.coeffs.values())

    def label(self) -> str:
        """Readable name such as ``Tr2`` or ``Tr1^2 - 2 Tr2``."""
        if not self.coeffs:
            return "0"
        parts = []
        for p, c in self.coeffs.items():
            mono = "*".join(f"Tr{n}" for n in p)
            coef = "" if c == 1 else f"({c.real:g}{c.imag:+g}j)*" if c.imag else f"{c.real:g}*"
            parts.append(coef + mono)
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# restriction through Newton's identities

Poly = dict  # partition -> complex, in generators p_1..p_n


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for p, c in a.items():
        for q, d in b.items():
            key = _canon_partition(p + q)
            out[key] = out.get(key, 0j) + c * d
    return out


def _padd(a: Poly, b: Poly, scale=1.0) -> Poly:
    out = dict(a)
    for p, c in b.items():
        out[p] = out.get(p, 0j) + scale * c
    return out


@lru_cache(maxsize=None)
def _elementary(n: int) -> tuple:
    """``e_0..e_n`` of an ``n x n`` matrix as polynomials in ``p_1..p_n``."""
    e = [{(): 1.0 + 0j}]
    for i in range(1, n + 1):
        acc: Poly = {}
        for j in range(1, i + 1):
            sign = 1.0 if j % 2 else -1.0
            acc = _padd(acc, _pmul(e[i - j], {(j,): 1.0}), sign / i)
        e.append(acc)
    return tuple(e)


@lru_cache(maxsize=None)
def _power_sum(j: int, n: int) -> tuple:
    """``p_j`` of an ``n x n`` matrix rewritten in ``p_1..p_n``; returned as item tuple."""
    if j <= n:
        return (((j,), 1.0 + 0j),)
    e = _elementary(n)
    acc: Poly = {}
    for i in range(1, n + 1):
        sign = 1.0 if i % 2 else -1.0
        acc = _padd(acc, _pmul(e[i], dict(_power_sum(j - i, n))), sign)
    return tuple((p, c) for p, c in acc.items() if c != 0)


def restrict_poly(P: InvariantPolynomial, n: int) -> InvariantPolynomial:
    """The restriction to ``n x n`` matrices embedded as ``B + 0``.

    Generators map to themselves; a part ``j > n`` is rewritten through Newton's
    identities for an ``n x n`` matrix.
    """
    if n < 1:
        raise InvariantError("n must be at least 1")
    if n >= P.m:
        if n == P.m:
            return P
        raise InvariantError("restriction needs n < m")
    out: Poly = {}
    for parts, c in P.coeffs.items():
        term: Poly = {(): c}
        for j in parts:
            term = _pmul(term, dict(_power_sum(j, n)))
        out = _padd(out, term)
    out = {p: v for p, v in out.items() if abs(v) > 1e-14 * max(1.0, abs(v))}
    return InvariantPolynomial(n, P.k, out)


def evaluate_on_matrix(P: InvariantPolynomial, B: np.ndarray) -> complex:
    """``P(B)`` for a square complex matrix."""
    B = np.asarray(B, dtype=complex)
    powers = {}
    total = 0j
    for parts, c in P.coeffs.items():
        val = c
        for n in parts:
            if n not in powers:
                powers[n] = np.trace(np.linalg.matrix_power(B, n))
            val *= powers[n]
        total += val
    return complex(total)


def evaluate_poly(P: InvariantPolynomial, F: FormMatrix) -> PQForm:
    """``P(F)`` as a ``(k, k)`` form; ``Tr_n`` is the trace of the n-th wedge power."""
    m = F.m
    traces: dict = {}
    power = None
    need = max((max(p) for p in P.coeffs), default=0)
    for n in range(1, need + 1):
        power = F if power is None else power @ F
        traces[n] = power.trace()
    total = None
    for parts, c in P.coeffs.items():
        term = PQForm.one(m)
        for n in parts:
            term = wedge(term, traces[n])
        term = term * c
        total = term if total is None else total + term
    if total is None:
        return _overflow(m, P.k, P.k) if P.k > m else PQForm.zero(m, P.k, P.k)
    return total


# ---------------------------------------------------------------------------
# JSON


def poly_to_json(P: InvariantPolynomial) -> dict:
    terms = [{"partition": list(p), "re": c.real, "im": c.imag} for p, c in P.coeffs.items()]
    return {"k": P.k, "terms": terms}


def poly_from_json(doc, m: int) -> InvariantPolynomial:
    """Parse ``{"k": int, "terms": [{"partition": [...], "re": f, "im": f}]}``."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        k = int(doc["k"])
        coeffs = {}
        for t in doc["terms"]:
            key = _canon_partition(t["partition"])
            coeffs[key] = coeffs.get(key, 0j) + complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantError(f"malformed polynomial: {exc}") from None
    return InvariantPolynomial(m, k, coeffs)


def poly_from_name(name: str, m: int) -> InvariantPolynomial:
    """Single monomials written like ``tr2``, ``tr1tr1`` or ``tr1^2``."""
    text = name.lower().replace("*", "").replace(" ", "")
    parts = []
    for n, power in re.findall(r"tr(\d+)(?:\^(\d+))?", text):
        parts += [int(n)] * int(power or 1)
    if not parts or re.sub(r"tr\d+(\^\d+)?", "", text):
        raise InvariantError(f"unknown polynomial name {name!r}")
    return InvariantPolynomial.monomial(m, parts)
