"""Metric jets of a Kähler metric at a single point.

A :class:`JetTable` stores the variables ``g(A;B)``: the derivatives
``d^A dbar^B f`` of a local potential with ``A`` and ``B`` non-empty multisets
of 1-based indices. The order-0 block ``g((a,);(b,))`` is the metric itself.
Multisets are sorted tuples, so symmetry inside ``A`` and inside ``B`` holds by
construction; conjugate symmetry ``g(B;A) = conj g(A;B)`` is enforced by every
constructor.

Holomorphic coordinate changes act on the table through its mixed Taylor
coefficients ``C[A,B] = g(A;B) / (eps(A) eps(B))`` where ``eps(A)`` is the
product of factorials of the multiplicities in ``A``. Substituting ``z = phi(w)``
sends ``C`` to ``M C M^H`` with ``M`` the matrix of the truncated power map.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .tensors import AxisRole, LabeledTensor

Key = tuple  # sorted tuple of 1-based indices


class JetError(ValueError):
    """Raised when jet data violates a structural invariant."""


class JetFileError(JetError):
    """A jet file could not be loaded; ``line`` points into the source text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def multiplicity_factor(A: Key) -> int:
    """``eps(A)``: the product of factorials of the multiplicities in ``A``."""
    out = 1
    for _, grp in itertools.groupby(sorted(A)):
        out *= math.factorial(len(list(grp)))
    return out


@lru_cache(maxsize=None)
def monomial_basis(m: int, max_order: int) -> tuple:
    """All multisets of size 1..max_order over 1..m, by size then lexicographic."""
    out = []
    for n in range(1, max_order + 1):
        out.extend(itertools.combinations_with_replacement(range(1, m + 1), n))
    return tuple(out)


@lru_cache(maxsize=None)
def _basis_index(m: int, max_order: int) -> dict:
    return {A: i for i, A in enumerate(monomial_basis(m, max_order))}


def _canon(A) -> Key:
    return tuple(sorted(int(a) for a in A))


@dataclass(frozen=True)
class JetTable:
    """Jet variables ``g(A;B)`` at a point for ``1 <= |A|, |B| <= max_order``.

    Absent keys are zero. Use :func:`prescribe_jets` or the other constructors
    rather than building the dict by hand.
    """

    m: int
    max_order: int
    entries: dict = field(repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise JetError("complex dimension must be positive")
        if self.max_order < 1:
            raise JetError("max_order must be at least 1")
        for (A, B), v in self.entries.items():
            partner = self.entries.get((B, A), 0j)
            if partner != np.conj(v):
                raise JetError(f"conjugate symmetry fails at A={A}, B={B}")

    def get(self, A, B) -> complex:
        return self.entries.get((_canon(A), _canon(B)), 0j)

    def metric(self) -> np.ndarray:
        """The order-0 block ``g_{a bbar}`` as an m x m Hermitian matrix."""
        G = np.zeros((self.m, self.m), dtype=complex)
        for a in range(self.m):
            for b in range(self.m):
                G[a, b] = self.get((a + 1,), (b + 1,))
        return G

    def is_normalized(self, tol: float = 1e-10) -> bool:
        """Unitary metric and vanishing ``(|A| >= 2, |B| = 1)`` jets."""
        if np.max(np.abs(self.metric() - np.eye(self.m))) > tol:
            return False
        for (A, B), v in self.entries.items():
            if len(B) == 1 and len(A) >= 2 and abs(v) > tol:
                return False
        return True

    def coefficient_matrix(self) -> np.ndarray:
        """Mixed Taylor coefficients over :func:`monomial_basis`."""
        basis = monomial_basis(self.m, self.max_order)
        index = _basis_index(self.m, self.max_order)
        C = np.zeros((len(basis), len(basis)), dtype=complex)
        for (A, B), v in self.entries.items():
            C[index[A], index[B]] = v / (multiplicity_factor(A) * multiplicity_factor(B))
        return C

    @classmethod
    def from_coefficient_matrix(cls, m: int, max_order: int, C: np.ndarray, zero_tol: float = 0.0):
        basis = monomial_basis(m, max_order)
        C = 0.5 * (C + C.conj().T)
        entries = {}
        for i, A in enumerate(basis):
            ea = multiplicity_factor(A)
            for j, B in enumerate(basis):
                v = C[i, j]
                if abs(v) > zero_tol:
                    entries[(A, B)] = complex(v * ea * multiplicity_factor(B))
        # exact conjugate pairs after the scaling above
        for (A, B) in list(entries):
            if A == B:
                entries[(A, B)] = complex(entries[(A, B)].real, 0.0)
            elif (B, A) in entries:
                entries[(B, A)] = complex(np.conj(entries[(A, B)]))
        return cls(m, max_order, entries)

    def truncate(self, max_order: int) -> "JetTable":
        keep = {k: v for k, v in self.entries.items() if len(k[0]) <= max_order and len(k[1]) <= max_order}
        return JetTable(self.m, max_order, keep)


@dataclass(frozen=True)
class KahlerCurvature:
    """Curvature ``R[a][bbar][cbar][d] = g((a,d);(b,c))`` in a unitary frame.

    Arrays are 0-based. ``dR[a][b][c][d][e]`` holds the covariant derivative in
    the holomorphic direction ``e`` when third-order jets were available.
    """

    m: int
    R: np.ndarray = field(repr=False)
    dR: np.ndarray | None = field(default=None, repr=False)
    auto_normalized: bool = False

    @property
    def tensor(self) -> LabeledTensor:
        roles = (AxisRole.HOL_LOWER, AxisRole.ANTIHOL_LOWER, AxisRole.ANTIHOL_LOWER, AxisRole.HOL_LOWER)
        return LabeledTensor(self.m, roles, self.R)


@dataclass(frozen=True)
class PotentialModel:
    """Real polynomial potential ``f = base + sum c * z^A zbar^B``.

    ``terms`` holds ``(A, B, c)`` with ``A``/``B`` multisets (possibly empty);
    reality requires the coefficient of ``(B, A)`` to be the conjugate of the
    coefficient of ``(A, B)``. ``base="euclidean"`` adds ``sum |z_a|^2``.
    """

    m: int
    terms: tuple
    base: str = "euclidean"

    def __post_init__(self):
        if self.base not in ("euclidean", "none"):
            raise JetError(f"unknown base {self.base!r}")
        merged: dict = {}
        for A, B, c in self.terms:
            key = (_canon(A), _canon(B))
            if any(not 1 <= a <= self.m for a in key[0] + key[1]):
                raise JetError(f"index out of range in term {key}")
            merged[key] = merged.get(key, 0j) + complex(c)
        for (A, B), c in merged.items():
            if abs(merged.get((B, A), 0j) - np.conj(c)) > 1e-12 * max(1.0, abs(c)):
                raise JetError(f"potential is not real: term {A}, {B}")
        object.__setattr__(self, "terms", tuple((A, B, c) for (A, B), c in sorted(merged.items())))


@dataclass(frozen=True)
class CoordinateChange:
    """Holomorphic coordinate change produced by :func:`normalize_coordinates`.

    ``linear`` is the matrix ``T`` of the first step ``z = T w``. Each later
    step of order ``n`` is ``z = w - sum_{|A|=n} c_A^b w^A``, the inverse to
    order ``n`` of ``w = z + sum c_A^b z^A``; ``coefficients`` maps
    ``(A, b)`` to ``c_A^b`` across all steps.
    """

    linear: np.ndarray
    coefficients: dict

    def is_identity(self, tol: float = 1e-12) -> bool:
        lin = np.max(np.abs(self.linear - np.eye(len(self.linear)))) <= tol
        return lin and all(abs(c) <= tol for c in self.coefficients.values())


# --------------------------------------------------------------------------
# constructors


def _eval_monomial_derivative(P, Q, A, B, point) -> complex:
    """``d^A dbar^B (z^P zbar^Q)`` at ``point``; P, Q, A, B are exponent vectors."""
    val = 1.0 + 0j
    for v in range(len(point)):
        if A[v] > P[v] or B[v] > Q[v]:
            return 0j
        val *= math.perm(P[v], A[v]) * math.perm(Q[v], B[v])
        val *= point[v] ** (P[v] - A[v]) * np.conj(point[v]) ** (Q[v] - B[v])
    return val


def _exponents(m: int, A: Key) -> list:
    e = [0] * m
    for a in A:
        e[a - 1] += 1
    return e


def jets_from_potential(p: PotentialModel, point=None, max_order: int = 2) -> JetTable:
    """Jets of ``g = base + d dbar f`` at ``point`` by exact term-wise differentiation."""
    m = p.m
    point = np.zeros(m, dtype=complex) if point is None else np.asarray(point, dtype=complex)
    terms = list(p.terms)
    if p.base == "euclidean":
        terms += [((a,), (a,), 1.0) for a in range(1, m + 1)]
    exps = [(_exponents(m, A), _exponents(m, B), complex(c)) for A, B, c in terms]
    basis = monomial_basis(m, max_order)
    entries = {}
    for i, A in enumerate(basis):
        ea = _exponents(m, A)
        for B in basis[i:]:
            eb = _exponents(m, B)
            v = sum(c * _eval_monomial_derivative(P, Q, ea, eb, point) for P, Q, c in exps)
            if A == B:
                v = complex(v.real, 0.0)
            if v != 0:
                entries[(A, B)] = complex(v)
                entries[(B, A)] = complex(np.conj(v))
    j = JetTable(m, max_order, entries)
    try:
        np.linalg.cholesky(j.metric())
    except np.linalg.LinAlgError:
        raise JetError("metric is not positive definite at the point") from None
    return j


def fubini_study_potential(m: int, order: int = 6) -> PotentialModel:
    """Polynomial truncation of ``log(1 + |z|^2)`` through ``(|z|^2)^order``."""
    power = {((), ()): 1.0 + 0j}
    acc: dict = {}
    for n in range(1, order + 1):
        nxt: dict = {}
        for (A, B), c in power.items():
            for a in range(1, m + 1):
                key = (_canon(A + (a,)), _canon(B + (a,)))
                nxt[key] = nxt.get(key, 0j) + c
        power = nxt
        sign = 1.0 if n % 2 else -1.0
        for key, c in power.items():
            acc[key] = acc.get(key, 0j) + sign * c / n
    return PotentialModel(m, tuple((A, B, c) for (A, B), c in acc.items()), base="none")


def prescribe_jets(m: int, max_order: int, values: dict | None = None) -> JetTable:
    """A table holding exactly the prescribed values; free entries are zero.

    Missing conjugate partners are filled in. The order-0 block defaults to the
    identity unless some order-0 entry is given.
    """
    values = values or {}
    entries: dict = {}
    for (A, B), v in values.items():
        key = (_canon(A), _canon(B))
        if not (1 <= len(key[0]) <= max_order and 1 <= len(key[1]) <= max_order):
            raise JetError(f"multiset sizes out of range for {key}")
        if any(not 1 <= a <= m for a in key[0] + key[1]):
            raise JetError(f"index out of range in {key}")
        v = complex(v)
        if key[0] == key[1] and v.imag != 0:
            raise JetError(f"diagonal entry {key} must be real")
        entries[key] = v
    for (A, B), v in list(entries.items()):
        partner = entries.get((B, A))
        if partner is None:
            entries[(B, A)] = complex(np.conj(v))
        elif partner != np.conj(v):
            raise JetError(f"conjugate symmetry violated for A={A}, B={B}")
    if not any(len(A) == 1 and len(B) == 1 for A, B in entries):
        for a in range(1, m + 1):
            entries[((a,), (a,))] = 1.0 + 0j
    j = JetTable(m, max_order, entries)
    G = j.metric()
    if not np.allclose(G, G.conj().T, atol=0):
        raise JetError("order-0 block is not Hermitian")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise JetError("order-0 block is not positive definite") from None
    return j


def random_jets(m: int, max_order: int = 2, seed: int = 0, scale: float = 1.0) -> JetTable:
    """Normalized jets with Gaussian entries for ``|A|, |B| >= 2``.

    Diagonal entries ``A == B`` are real with variance ``scale**2``; the others
    are circular complex with ``E|g|^2 = scale**2``.
    """
    scale = abs(float(scale)) if np.isfinite(scale) else 0.0
    rng = np.random.default_rng(seed)
    entries = {((a,), (a,)): 1.0 + 0j for a in range(1, m + 1)}
    higher = [A for A in monomial_basis(m, max_order) if len(A) >= 2]
    for i, A in enumerate(higher):
        for B in higher[i:]:
            if A == B:
                v = complex(scale * rng.standard_normal(), 0.0)
            else:
                x, y = rng.standard_normal(2)
                v = complex(scale * x, scale * y) / math.sqrt(2.0)
            if v != 0:
                entries[(A, B)] = v
                entries[(B, A)] = complex(np.conj(v))
    return JetTable(m, max_order, entries)


# --------------------------------------------------------------------------
# holomorphic substitutions


def _poly_mul(u: np.ndarray, v: np.ndarray, m: int, max_order: int) -> np.ndarray:
    basis = monomial_basis(m, max_order)
    index = _basis_index(m, max_order)
    out = np.zeros(len(basis), dtype=complex)
    for i in np.flatnonzero(u):
        for j in np.flatnonzero(v):
            key = _canon(basis[i] + basis[j])
            if len(key) <= max_order:
                out[index[key]] += u[i] * v[j]
    return out


def substitution_matrix(phi: np.ndarray, m: int, max_order: int) -> np.ndarray:
    """``M[A', A]`` = coefficient of ``w^{A'}`` in ``prod_{a in A} phi^a(w)``.

    ``phi`` has shape ``(m, len(basis))``: row ``a`` is the polynomial ``z^a(w)``
    without constant term.
    """
    basis = monomial_basis(m, max_order)
    M = np.zeros((len(basis), len(basis)), dtype=complex)
    cache: dict = {}
    for col, A in enumerate(basis):
        if len(A) == 1:
            vec = phi[A[0] - 1]
        else:
            vec = _poly_mul(cache[A[:-1]], phi[A[-1] - 1], m, max_order)
        cache[A] = vec
        M[:, col] = vec
    return M


def substitute(j: JetTable, phi: np.ndarray) -> JetTable:
    """Jets of the same metric in coordinates ``w`` with ``z = phi(w)``."""
    M = substitution_matrix(phi, j.m, j.max_order)
    C = M @ j.coefficient_matrix() @ M.conj().T
    return JetTable.from_coefficient_matrix(j.m, j.max_order, C)


def linear_change(j: JetTable, T: np.ndarray) -> JetTable:
    """Apply ``z = T w``; for unitary ``T`` this is a change of unitary frame."""
    basis = monomial_basis(j.m, j.max_order)
    phi = np.zeros((j.m, len(basis)), dtype=complex)
    phi[:, : j.m] = np.asarray(T, dtype=complex)
    return substitute(j, phi)


def normalize_coordinates(j: JetTable) -> tuple:
    """Unitary metric and vanishing ``(A; b)`` jets, order by order.

    First a Cholesky (Gram-Schmidt) linear change, then for each order ``n``
    the change ``z^b = w^b - sum_{|A|=n} c_A^b w^A`` with
    ``eps(A) c_A^b = g(A; b)``.
    """
    G = j.metric()
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise JetError("degenerate or indefinite order-0 block") from None
    T = np.linalg.inv(L.T)
    if np.max(np.abs(T - np.eye(j.m))) > 0:
        j = linear_change(j, T)
    basis = monomial_basis(j.m, j.max_order)
    index = _basis_index(j.m, j.max_order)
    coefficients = {}
    for n in range(2, j.max_order + 1):
        C = j.coefficient_matrix()
        phi = np.zeros((j.m, len(basis)), dtype=complex)
        for b in range(j.m):
            phi[b, b] = 1.0
        touched = False
        for A in basis:
            if len(A) != n:
                continue
            for b in range(1, j.m + 1):
                c = C[index[A], index[(b,)]]
                if c != 0:
                    coefficients[(A, b)] = complex(c)
                    phi[b - 1, index[A]] -= c
                    touched = True
        if touched:
            j = substitute(j, phi)
    # drop rounding residue in the eliminated block so the flag is exact
    clean = {k: v for k, v in j.entries.items() if not (len(k[1]) == 1 and len(k[0]) >= 2)}
    clean = {k: v for k, v in clean.items() if not (len(k[0]) == 1 and len(k[1]) >= 2)}
    for a in range(1, j.m + 1):
        for b in range(1, j.m + 1):
            clean.pop(((a,), (b,)), None)
        clean[((a,), (a,))] = 1.0 + 0j
    return JetTable(j.m, j.max_order, clean), CoordinateChange(T, coefficients)


def curvature_from_jets(j: JetTable) -> KahlerCurvature:
    """``R[a][bbar][cbar][d] = g((a,d);(b,c))`` on normalized jets.

    Un-normalized input is normalized first and ``auto_normalized`` is set.
    """
    if j.max_order < 2:
        raise JetError("curvature needs jets of order 2")
    auto = False
    if not j.is_normalized():
        j, _ = normalize_coordinates(j)
        auto = True
    m = j.m
    R = np.zeros((m,) * 4, dtype=complex)
    for a, b, c, d in itertools.product(range(m), repeat=4):
        R[a, b, c, d] = j.get((a + 1, d + 1), (b + 1, c + 1))
    dR = None
    if j.max_order >= 3:
        dR = np.zeros((m,) * 5, dtype=complex)
        for a, b, c, d, e in itertools.product(range(m), repeat=5):
            dR[a, b, c, d, e] = j.get((a + 1, d + 1, e + 1), (b + 1, c + 1))
    return KahlerCurvature(m, R, dR, auto)


def curvature_in_frame(K: KahlerCurvature, U: np.ndarray) -> KahlerCurvature:
    """Curvature components in the frame ``e_a = sum_alpha U[alpha, a] d_alpha``."""
    U = np.asarray(U, dtype=complex)
    Uc = U.conj()
    R = np.einsum("pqrs,pa,qb,rc,sd->abcd", K.R, U, Uc, Uc, U, optimize=True)
    dR = None
    if K.dR is not None:
        dR = np.einsum("pqrst,pa,qb,rc,sd,te->abcde", K.dR, U, Uc, Uc, U, U, optimize=True)
    return KahlerCurvature(K.m, R, dR, K.auto_normalized)


def product_with_torus(j: JetTable, extra: int) -> JetTable:
    """Jets of the product with a flat torus of complex dimension ``extra``."""
    if extra < 1:
        raise JetError("extra must be at least 1")
    entries = dict(j.entries)
    for a in range(j.m + 1, j.m + extra + 1):
        entries[((a,), (a,))] = 1.0 + 0j
    return JetTable(j.m + extra, j.max_order, entries)


def product_of_jets(*tables: JetTable) -> JetTable:
    """Jets of a Riemannian product; indices of later factors are shifted."""
    entries: dict = {}
    offset = 0
    order = max(t.max_order for t in tables)
    for t in tables:
        for (A, B), v in t.entries.items():
            entries[(tuple(a + offset for a in A), tuple(b + offset for b in B))] = v
        offset += t.m
    return JetTable(offset, order, entries)


def random_unitary(m: int, seed: int) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    Q, Rm = np.linalg.qr(Z)
    d = np.diagonal(Rm)
    return Q * (d / np.abs(d))


# --------------------------------------------------------------------------
# JSON jet files


def dump_jets(j: JetTable) -> str:
    """Serialize to the jet-file format; only one of each conjugate pair is written."""
    rows = []
    for (A, B), v in sorted(j.entries.items()):
        if (A, B) <= (B, A):
            rows.append({"A": list(A), "B": list(B), "re": float(v.real), "im": float(v.imag)})
    return json.dumps({"m": j.m, "max_order": j.max_order, "entries": rows}, indent=1)


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def _entry_offsets(text: str) -> list:
    """Character offsets of each element of the top-level ``entries`` array."""
    dec = json.JSONDecoder()
    pos = text.find('"entries"')
    if pos < 0:
        return []
    pos = text.find("[", pos)
    offsets = []
    i = pos + 1
    while i < len(text):
        while i < len(text) and text[i] in " \t\r\n,":
            i += 1
        if i >= len(text) or text[i] == "]":
            break
        offsets.append(i)
        _, i = dec.raw_decode(text, i)
    return offsets


def load_jets(text: str) -> JetTable:
    """Parse a jet file, rejecting any invariant violation with its line number."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JetFileError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict):
        raise JetFileError("top level must be an object", 1)
    for key in ("m", "max_order", "entries"):
        if key not in doc:
            raise JetFileError(f"missing key {key!r}", 1)
    m, order = doc["m"], doc["max_order"]
    if not isinstance(m, int) or m < 1:
        raise JetFileError("m must be a positive integer", _line_of(text, text.find('"m"')))
    if not isinstance(order, int) or order < 2:
        raise JetFileError("max_order must be an integer >= 2", _line_of(text, text.find('"max_order"')))
    offsets = _entry_offsets(text)
    values: dict = {}
    for n, row in enumerate(doc["entries"]):
        line = _line_of(text, offsets[n]) if n < len(offsets) else None
        try:
            A, B = _canon(row["A"]), _canon(row["B"])
            v = complex(float(row["re"]), float(row["im"]))
        except (KeyError, TypeError, ValueError):
            raise JetFileError("entry needs integer lists A, B and numbers re, im", line) from None
        if not np.isfinite(v):
            raise JetFileError("non-finite value", line)
        if not (1 <= len(A) <= order and 1 <= len(B) <= order):
            raise JetFileError(f"multiset sizes must lie in 1..{order}", line)
        if any(not 1 <= a <= m for a in A + B):
            raise JetFileError(f"index out of range 1..{m}", line)
        if A == B and v.imag != 0:
            raise JetFileError("diagonal entry must be real", line)
        if (A, B) in values and values[(A, B)][0] != v:
            raise JetFileError(f"duplicate entry for A={list(A)}, B={list(B)} disagrees", line)
        partner = values.get((B, A))
        if partner is not None and abs(partner[0] - np.conj(v)) > 1e-12 * max(1.0, abs(v)):
            raise JetFileError(
                f"conjugate symmetry violated against line {partner[1]}: g(B;A) != conj g(A;B)", line
            )
        values[(A, B)] = (v, line)
    clean = {}
    for (A, B), (v, _) in values.items():
        if (B, A) in values and (B, A) < (A, B):
            continue
        clean[(A, B)] = v
    try:
        return prescribe_jets(m, order, clean)
    except JetError as exc:
        raise JetFileError(str(exc), 1) from None
