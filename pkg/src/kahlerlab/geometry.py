"""Compact Kähler models, quadrature grids and integrals of curvature invariants.

A model is a product of flat tori and projective spaces with the
Fubini-Study potential ``log(1 + |z|^2)`` on the affine chart, plus a real
perturbation built from separable terms. Each term is ``2 Re(c * prod parts)``
with parts

* ``("fourier", var, p, q)``: ``exp(2 pi i (p x + q y))`` on a torus variable,
* ``("mono", var, a, b)``: ``z^a zbar^b`` on a one-dimensional projective factor,
* ``("weight", factor, c)``: ``(1 + |z_factor|^2)^(-c)`` on a projective factor.

A monomial on a projective line must come with a weight of at least its degree
so that the term extends smoothly over the point at infinity.

Derivatives of the potential are exact (truncated power series), never finite
differences. Integrals use the measure ``det G dLeb`` in the chart coordinates;
the torus has unit Lebesgue volume.

Projective factors are integrated over the unit ball of two charts: ``z`` and
the inverted chart ``w_1 = 1/z_1``, ``w_j = z_j/z_1``. In the inverted chart
the Fubini-Study potential changes by a pluriharmonic function and the terms
become ``w_1^(C-A) wbar_1^(C-B) (1 + |w|^2)^(-C)``, where ``A``, ``B`` are the
monomial degrees and ``C`` the total weight. Far out in a single chart the
fourth derivatives cancel to many digits, which the second chart avoids.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import contractions
from .invariants import InvariantPolynomial
from .jets import JetError, JetTable, monomial_basis, normalize_coordinates
from .series import Series

CHUNK = 32768


class GeometryError(ValueError):
    """Raised for invalid models, grids or a metric that is not positive definite."""


# ---------------------------------------------------------------------------
# potentials and models


@dataclass(frozen=True)
class Factor:
    kind: str  # "torus" or "cp"
    dim: int

    def __post_init__(self):
        if self.kind not in ("torus", "cp"):
            raise GeometryError(f"unknown factor kind {self.kind!r}")
        if self.dim < 1:
            raise GeometryError("factor dimension must be positive")


@dataclass(frozen=True)
class PotentialTerm:
    """``2 Re(coeff * prod(parts))``; see the module docstring for part syntax."""

    coeff: complex
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeff", complex(self.coeff))
        object.__setattr__(self, "parts", tuple(tuple(p) for p in self.parts))
        for p in self.parts:
            if p[0] not in ("fourier", "mono", "weight") or len(p) != {"fourier": 4, "mono": 4, "weight": 3}[p[0]]:
                raise GeometryError(f"malformed potential part {p!r}")


@dataclass(frozen=True)
class SeparablePotential:
    """``sum flat_w |z_v|^2 + sum fs_w log(1 + |z_F|^2) + sum terms``."""

    terms: tuple = ()
    flat: tuple = ()  # (var, weight)
    fs: tuple = ()  # (factor, weight)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(t if isinstance(t, PotentialTerm) else PotentialTerm(*t) for t in self.terms))
        object.__setattr__(self, "flat", tuple((int(v), float(w)) for v, w in self.flat))
        object.__setattr__(self, "fs", tuple((int(f), float(w)) for f, w in self.fs))

    def describe(self) -> dict:
        return {
            "terms": [{"coeff": [t.coeff.real, t.coeff.imag], "parts": [list(p) for p in t.parts]} for t in self.terms],
            "flat": [list(x) for x in self.flat],
            "fs": [list(x) for x in self.fs],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SeparablePotential":
        terms = tuple(PotentialTerm(complex(*t["coeff"]), tuple(tuple(p) for p in t["parts"])) for t in doc.get("terms", []))
        return cls(terms, tuple(map(tuple, doc.get("flat", []))), tuple(map(tuple, doc.get("fs", []))))

    def is_zero(self) -> bool:
        return not self.terms and all(w == 0 for _, w in self.flat) and all(w == 0 for _, w in self.fs)


@dataclass(frozen=True)
class KahlerModel:
    """Product of factors with the standard potentials plus perturbation ``terms``."""

    factors: tuple
    terms: tuple = ()

    def __post_init__(self):
        factors = []
        for f in self.factors:
            f = f if isinstance(f, Factor) else Factor(*f)
            # a flat torus is a product of flat one-dimensional tori, which lets
            # separable potentials be evaluated one coordinate at a time
            factors += [Factor("torus", 1)] * f.dim if f.kind == "torus" else [f]
        object.__setattr__(self, "factors", tuple(factors))
        object.__setattr__(self, "terms", tuple(t if isinstance(t, PotentialTerm) else PotentialTerm(*t) for t in self.terms))
        if not self.factors:
            raise GeometryError("a model needs at least one factor")
        validate_potential(self, SeparablePotential(self.terms))

    @property
    def m(self) -> int:
        return sum(f.dim for f in self.factors)

    @property
    def kind(self) -> str:
        kinds = {f.kind for f in self.factors}
        if len(self.factors) == 1 or kinds == {"torus"}:
            return "torus" if kinds == {"torus"} else "fubini-study"
        return "product"

    def variables(self, factor: int) -> list:
        start = sum(f.dim for f in self.factors[:factor])
        return list(range(start, start + self.factors[factor].dim))

    def factor_of(self, var: int) -> int:
        for i in range(len(self.factors)):
            if var in self.variables(i):
                return i
        raise GeometryError(f"variable {var} out of range")

    @property
    def potential(self) -> SeparablePotential:
        flat, fs = [], []
        for i, f in enumerate(self.factors):
            if f.kind == "torus":
                flat += [(v, 1.0) for v in self.variables(i)]
            else:
                fs.append((i, 1.0))
        return SeparablePotential(self.terms, tuple(flat), tuple(fs))

    def is_homogeneous(self) -> bool:
        return not self.terms

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "m": self.m,
            "factors": [[f.kind, f.dim] for f in self.factors],
            "potential": SeparablePotential(self.terms).describe(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KahlerModel":
        terms = SeparablePotential.from_dict(doc.get("potential", {})).terms
        return cls(tuple(Factor(k, int(d)) for k, d in doc["factors"]), terms)


def validate_potential(model: KahlerModel, pot: SeparablePotential):
    """Check that every part sits on a factor where it defines a smooth function."""
    for t in pot.terms:
        weights = {}
        monos = []
        for p in t.parts:
            if p[0] == "fourier":
                if model.factors[model.factor_of(p[1])].kind != "torus":
                    raise GeometryError("fourier parts live on torus variables")
            elif p[0] == "mono":
                f = model.factor_of(p[1])
                if model.factors[f].kind != "cp" or model.factors[f].dim != 1:
                    raise GeometryError("monomial parts live on projective lines")
                if p[2] < 0 or p[3] < 0:
                    raise GeometryError("monomial exponents must be non-negative")
                monos.append((f, max(p[2], p[3])))
            else:
                if not 0 <= p[1] < len(model.factors) or model.factors[p[1]].kind != "cp":
                    raise GeometryError("weight parts live on projective factors")
                if int(p[2]) != p[2] or p[2] < 1:
                    raise GeometryError("weight exponents must be positive integers")
                weights[p[1]] = weights.get(p[1], 0) + int(p[2])
        for f, deg in monos:
            if weights.get(f, 0) < deg:
                raise GeometryError("a monomial on a projective line needs a weight of at least its degree")
    for v, _ in pot.flat:
        if model.factors[model.factor_of(v)].kind != "torus":
            raise GeometryError("flat weights live on torus variables")
    for f, _ in pot.fs:
        if model.factors[f].kind != "cp":
            raise GeometryError("Fubini-Study weights live on projective factors")


def is_radial_on(model: KahlerModel, pot: SeparablePotential, factor: int) -> bool:
    """Whether every term is invariant under unitary rotations of ``factor``."""
    variables = set(model.variables(factor))
    for t in pot.terms:
        for p in t.parts:
            if p[0] == "mono" and p[1] in variables and p[2] != p[3]:
                return False
    return True


def torus_model(m: int, terms=()) -> KahlerModel:
    return KahlerModel((Factor("torus", m),), tuple(terms))


def fubini_study_model(d: int, terms=()) -> KahlerModel:
    return KahlerModel((Factor("cp", d),), tuple(terms))


def product_model(*factors, terms=()) -> KahlerModel:
    return KahlerModel(tuple(Factor(*f) if not isinstance(f, Factor) else f for f in factors), tuple(terms))


def space_model(name: str) -> KahlerModel:
    """Parse names like ``cp1``, ``cp2``, ``torus2``, ``cp1xcp1`` or ``cp1xtorus1``."""
    factors = []
    for piece in name.lower().split("x"):
        for prefix, kind in (("cp", "cp"), ("torus", "torus"), ("t", "torus")):
            if piece.startswith(prefix) and piece[len(prefix):].isdigit():
                factors.append(Factor(kind, int(piece[len(prefix):])))
                break
        else:
            raise GeometryError(f"unknown space {name!r}")
    return KahlerModel(tuple(factors))


def random_perturbation(model: KahlerModel, seed: int, n_terms: int = 3, amplitude: float = 0.05, radial: bool = False) -> tuple:
    """Random smooth terms touching every factor; ``radial`` keeps them rotation invariant."""
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(n_terms):
        parts = []
        for i, f in enumerate(model.factors):
            if f.kind == "torus":
                for v in model.variables(i):
                    p, q = rng.integers(-1, 2, size=2)
                    if p or q or rng.random() < 0.5:
                        parts.append(("fourier", v, int(p), int(q)))
            elif f.dim == 1 and not radial:
                a, b = (int(x) for x in rng.integers(0, 2, size=2))
                if a or b:
                    parts.append(("mono", model.variables(i)[0], a, b))
                parts.append(("weight", i, max(a, b, 1) + int(rng.integers(0, 2))))
            else:
                parts.append(("weight", i, int(rng.integers(1, 3))))
        # keep the complex Hessian of the term comparable to ``amplitude``
        freq = sum(p[2] ** 2 + p[3] ** 2 for p in parts if p[0] == "fourier")
        c = amplitude * (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2) / (1 + math.pi**2 * freq)
        terms.append(PotentialTerm(c, tuple(parts)))
    return tuple(terms)


# ---------------------------------------------------------------------------
# series evaluation of potentials


def potential_series(model: KahlerModel, pot: SeparablePotential, points: np.ndarray, D: int = 2) -> Series:
    """Power series of the real potential ``pot`` around each point."""
    m = model.m
    points = np.asarray(points, dtype=complex)
    z = [Series.variable(m, D, v, points) for v in range(m)]
    zb = [Series.variable(m, D, v, points, conjugate=True) for v in range(m)]
    out = Series.constant(m, D, 0.0, len(points))
    for v, w in pot.flat:
        if w:
            out = out + (z[v] * zb[v]) * w

    def norm2(factor):
        s = Series.constant(m, D, 1.0, len(points))
        for v in model.variables(factor):
            s = s + z[v] * zb[v]
        return s

    for f, w in pot.fs:
        if w:
            out = out + norm2(f).log() * w
    for t in pot.terms:
        term = Series.constant(m, D, t.coeff, len(points))
        for p in t.parts:
            if p[0] == "fourier":
                _, v, pp, qq = p
                a = math.pi * (qq + 1j * pp)
                b = math.pi * (1j * pp - qq)
                term = term * (z[v] * a + zb[v] * b).exp()
            elif p[0] == "mono":
                _, v, a, b = p
                for _ in range(a):
                    term = term * z[v]
                for _ in range(b):
                    term = term * zb[v]
            else:
                _, f, c = p
                term = term * norm2(f).power(-float(c))
        out = out + term + term.conj()
    return out.real_part()


def _derivative_arrays(s, m: int | None = None) -> dict:
    """Metric, third and fourth derivatives, batched.

    ``s`` is a :class:`Series` or a callable ``(hol, anti) -> values`` giving
    one value per point; callables need ``m``.
    """
    deriv = s.derivative if isinstance(s, Series) else s
    m = s.m if m is None else m
    r = range(m)
    G = F3h = F3a = F4 = None
    for a, b in itertools.product(r, r):
        v = deriv([a], [b])
        if G is None:
            n = len(v)
            G = np.zeros((n, m, m), dtype=complex)
            F3h = np.zeros((n, m, m, m), dtype=complex)
            F3a = np.zeros((n, m, m, m), dtype=complex)
            F4 = np.zeros((n, m, m, m, m), dtype=complex)
        G[:, a, b] = v
    for a, d, p in itertools.product(r, r, r):
        if d >= a:
            F3h[:, a, d, p] = F3h[:, d, a, p] = deriv([a, d], [p])
    for q, b, c in itertools.product(r, r, r):
        if c >= b:
            F3a[:, q, b, c] = F3a[:, q, c, b] = deriv([q], [b, c])
    for a, d, b, c in itertools.product(r, r, r, r):
        if d >= a and c >= b:
            v = deriv([a, d], [b, c])
            F4[:, a, d, b, c] = F4[:, d, a, b, c] = F4[:, a, d, c, b] = F4[:, d, a, c, b] = v
    return {"G": G, "F3h": F3h, "F3a": F3a, "F4": F4}


def _inverted_parts(model: KahlerModel, factor: int, parts) -> tuple:
    """The parts of one term on ``factor``, rewritten in the inverted chart."""
    first = model.variables(factor)[0]
    A = sum(p[2] for p in parts if p[0] == "mono")
    B = sum(p[3] for p in parts if p[0] == "mono")
    C = sum(int(p[2]) for p in parts if p[0] == "weight")
    if C < max(A, B):
        raise GeometryError("a monomial on a projective line needs a weight of at least its degree")
    out = []
    if C:
        out = [("mono", first, C - A, C - B), ("weight", factor, C)]
    return tuple(out)


def _part_factor(model: KahlerModel, part) -> int:
    return part[1] if part[0] == "weight" else model.factor_of(part[1])


def chart_potential(model: KahlerModel, pot: SeparablePotential, inverted) -> SeparablePotential:
    """``pot`` written in the chart where the factors in ``inverted`` use ``w = 1/z``."""
    inverted = set(inverted)
    if not inverted:
        return pot
    terms = []
    for t in pot.terms:
        parts = [p for p in t.parts if _part_factor(model, p) not in inverted]
        for f in sorted(inverted):
            parts += list(_inverted_parts(model, f, [p for p in t.parts if _part_factor(model, p) == f]))
        terms.append(PotentialTerm(t.coeff, tuple(parts)))
    return SeparablePotential(tuple(terms), pot.flat, pot.fs)


class FactorizedPotential:
    """A separable potential as a sum of products of single-factor series.

    Each factor series is expanded only at that factor's own grid points; a
    derivative at a product point is the product of factor derivatives, so
    the cost scales with the factor grids rather than with their product.
    ``factor_charts`` flags, per factor, the points given in the inverted chart.
    """

    def __init__(self, model: KahlerModel, pot: SeparablePotential, factor_points: list, D: int = 2, factor_charts: list | None = None):
        self.m = model.m
        self.model = model
        self.products = []  # (coeff, {factor: Series})
        self.D = D
        self.points = factor_points
        self.charts = factor_charts or [np.zeros(len(p), dtype=bool) for p in factor_points]
        offsets = {}
        for f in range(len(model.factors)):
            for v in model.variables(f):
                offsets[v] = (f, v - model.variables(f)[0])
        self.offsets = offsets

        for v, w in pot.flat:
            if w:
                f, lv = offsets[v]
                self.products.append((w, {f: self._piece(f, [("mono", v, 1, 1)])}))
        for f, w in pot.fs:
            if w:
                # log(1 + |w|^2) differs from log(1 + |z|^2) by a pluriharmonic function
                self.products.append((w, {f: self._on_points(f, lambda z, zb, f=f: self._norm2(z, zb).log().real_part())}))
        for t in pot.terms:
            groups = {}
            for p in t.parts:
                groups.setdefault(_part_factor(model, p), []).append(p)
            factors = {f: self._piece(f, parts) for f, parts in groups.items()}
            self.products.append((t.coeff, factors))
            self.products.append((t.coeff.conjugate(), {f: s.conj() for f, s in factors.items()}))

    def _norm2(self, z, zb):
        s = Series.constant(len(z), self.D, 1.0, len(z[0].c))
        for a, b in zip(z, zb):
            s = s + a * b
        return s

    def _on_points(self, f: int, build, build_inverted=None) -> Series:
        """Evaluate ``build(z, zbar)`` on the factor points, chart by chart."""
        d = self.model.factors[f].dim
        pts, inv = self.points[f], self.charts[f]
        out = None
        for flag, fn in ((False, build), (True, build_inverted or build)):
            mask = inv == flag
            if not mask.any():
                continue
            sub = pts[mask]
            z = [Series.variable(d, self.D, v, sub) for v in range(d)]
            zb = [Series.variable(d, self.D, v, sub, conjugate=True) for v in range(d)]
            s = fn(z, zb)
            if mask.all():
                return s
            if out is None:
                out = Series(d, self.D, np.zeros((len(pts),) + s.c.shape[1:], dtype=complex))
            out.c[mask] = s.c
        return out

    def _build(self, f: int, parts):
        first = self.model.variables(f)[0]

        def fn(z, zb):
            piece = Series.constant(len(z), self.D, 1.0, len(z[0].c))
            for p in parts:
                if p[0] == "weight":
                    piece = piece * self._norm2(z, zb).power(-float(p[2]))
                    continue
                lv = p[1] - first
                if p[0] == "fourier":
                    a = math.pi * (p[3] + 1j * p[2])
                    b = math.pi * (1j * p[2] - p[3])
                    piece = piece * (z[lv] * a + zb[lv] * b).exp()
                else:
                    for _ in range(p[2]):
                        piece = piece * z[lv]
                    for _ in range(p[3]):
                        piece = piece * zb[lv]
            return piece

        return fn

    def _piece(self, f: int, parts) -> Series:
        build = self._build(f, parts)
        inverted = None
        if self.model.factors[f].kind == "cp":
            inverted = self._build(f, _inverted_parts(self.model, f, parts))
        return self._on_points(f, build, inverted)

    def derivative(self, hol, anti, index: np.ndarray) -> np.ndarray:
        """``d^hol dbar^anti`` at the product points with factor rows ``index``."""
        lh, la = {}, {}
        for v in hol:
            f, lv = self.offsets[v]
            lh.setdefault(f, []).append(lv)
        for v in anti:
            f, lv = self.offsets[v]
            la.setdefault(f, []).append(lv)
        touched = set(lh) | set(la)
        total = np.zeros(len(index), dtype=complex)
        for coeff, factors in self.products:
            if not touched <= set(factors):
                continue
            value = np.full(len(index), coeff, dtype=complex)
            for f, s in factors.items():
                value = value * s.derivative(lh.get(f, []), la.get(f, []))[index[:, f]]
            total += value
        return total

    def arrays(self, index: np.ndarray) -> dict:
        """Derivative arrays at the product points whose factor indices are ``index``."""
        return _derivative_arrays(lambda hol, anti: self.derivative(hol, anti, index), self.m)


def curvature_batch(d: dict) -> tuple:
    """Unitary-frame curvature, frame matrix and ``det G`` from derivative arrays.

    ``R[a][bbar][cbar][d] = F4[a,d,b,c] - F3h[a,d,p] Ginv[p,q] F3a[q,b,c]`` in the
    coordinate frame, then moved to the Cholesky frame ``z = T w``.
    """
    G = d["G"]
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise GeometryError("metric is not positive definite on the grid") from None
    W = np.linalg.inv(G)
    K = d["F4"].transpose(0, 1, 3, 4, 2) - np.einsum("nadp,npq,nqbc->nabcd", d["F3h"], W, d["F3a"], optimize=True)
    T = np.linalg.inv(np.swapaxes(L, -1, -2))
    Tc = T.conj()
    R = np.einsum("npqrs,npa,nqb,nrc,nsd->nabcd", K, T, Tc, Tc, T, optimize=True)
    det = np.prod(np.real(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1) ** 2
    return R, T, det


def model_jets_at(model: KahlerModel, point, max_order: int = 2, potential: SeparablePotential | None = None) -> JetTable:
    """Normalized jets of the model at a chart point, from exact derivatives of the potential."""
    pot = model.potential if potential is None else potential
    point = np.asarray(point, dtype=complex).reshape(1, model.m)
    s = potential_series(model, pot, point, D=max_order)
    entries = {}
    higher = [A for A in monomial_basis(model.m, max_order) if len(A) >= 1]
    for A in higher:
        for B in higher:
            v = complex(s.derivative([a - 1 for a in A], [b - 1 for b in B])[0])
            if v != 0:
                entries[(A, B)] = v
    try:
        j = JetTable(model.m, max_order, entries)
        table, _ = normalize_coordinates(j)
    except JetError as exc:
        raise GeometryError(str(exc)) from None
    return table


# ---------------------------------------------------------------------------
# grids


@dataclass
class QuadratureGrid:
    """Tensor-product rule: chart points ``(npts, m)`` and Lebesgue weights.

    ``charts[n, f]`` is true when the coordinates of factor ``f`` at point
    ``n`` are in the inverted chart of that projective factor.
    """

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    spec: dict = field(default_factory=dict)
    factor_points: list | None = field(default=None, repr=False)
    factor_index: np.ndarray | None = field(default=None, repr=False)
    factor_charts: list | None = field(default=None, repr=False)

    def factorization(self, model: KahlerModel) -> tuple:
        """Per-factor point lists, chart flags and, for every grid point, its row in each list."""
        if self.factor_points is not None:
            charts = self.factor_charts or [np.zeros(len(p), dtype=bool) for p in self.factor_points]
            return self.factor_points, self.factor_index, charts
        pts = [self.points[:, model.variables(f)] for f in range(len(model.factors))]
        idx = np.tile(np.arange(self.size)[:, None], (1, len(model.factors)))
        return pts, idx, [np.zeros(self.size, dtype=bool) for _ in model.factors]

    def charts(self, model: KahlerModel) -> np.ndarray:
        pts, idx, charts = self.factorization(model)
        return np.stack([charts[f][idx[:, f]] for f in range(len(pts))], axis=1)

    @property
    def size(self) -> int:
        return len(self.weights)

    def describe(self) -> dict:
        return dict(self.spec, points=self.size)


def _unit_rule(n: int):
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    t, w = np.polynomial.legendre.leggauss(n)
    return (t + 1) / 2, w / 2


def _factor_rule(f: Factor, torus_n: int, radial_n: int, angular_n: int):
    if f.kind == "torus":
        x = np.arange(torus_n) / torus_n
        one = (x[:, None] + 1j * x[None, :]).reshape(-1)
        pts = np.array(list(itertools.product(one, repeat=f.dim)), dtype=complex).reshape(-1, f.dim)
        return pts, np.full(len(pts), 1.0 / torus_n ** (2 * f.dim)), np.zeros(len(pts), dtype=bool)
    r, wr = _unit_rule(radial_n)
    if f.dim == 1:
        # the unit disc in each chart
        theta = 2 * np.pi * np.arange(angular_n) / angular_n
        disc = (r[:, None] * np.exp(1j * theta[None, :])).reshape(-1, 1)
        w = (wr[:, None] * r[:, None] * np.full(angular_n, 2 * np.pi / angular_n)[None, :]).reshape(-1)
        pts = np.concatenate([disc, disc])
        return pts, np.concatenate([w, w]), np.repeat([False, True], len(disc))
    # rotation-invariant integrands only: one representative per radius. The
    # point (1/s, 0, ..) has inverted coordinates (s, 0, ..), and r = 1/s turns
    # r^(2d-1) dr times the Jacobian |dw/dz|^2 = r^(-2d-2) into s ds.
    sphere = 2 * np.pi**f.dim / math.factorial(f.dim - 1)
    ray = np.zeros((len(r), f.dim), dtype=complex)
    ray[:, 0] = r
    pts = np.concatenate([ray, ray])
    w = np.concatenate([wr * r ** (2 * f.dim - 1), wr * r]) * sphere
    return pts, w, np.repeat([False, True], len(r))


def make_grid(model: KahlerModel, torus_n: int = 16, radial_n: int = 40, angular_n: int = 16, variation: SeparablePotential | None = None) -> QuadratureGrid:
    """Product rule: uniform on tori, Gauss-Legendre in the radius of each chart ball.

    Projective lines use ``angular_n`` equally spaced angles; ``angular_n = 1``
    and projective factors of dimension at least 2 are only valid when the
    model and the variation are rotation invariant there.
    """
    pots = [SeparablePotential(model.terms)] + ([variation] if variation is not None else [])
    rules = []
    for i, f in enumerate(model.factors):
        if f.kind == "cp" and (f.dim > 1 or angular_n == 1):
            if not all(is_radial_on(model, p, i) for p in pots):
                raise GeometryError(f"factor {i} needs an angular grid: the potential is not rotation invariant")
        rules.append(_factor_rule(f, torus_n, radial_n, angular_n))
    grids = np.meshgrid(*[np.arange(len(w)) for _, w, _ in rules], indexing="ij")
    index = np.stack([g.reshape(-1) for g in grids], axis=1)
    pts = np.concatenate([p[index[:, f]] for f, (p, _, _) in enumerate(rules)], axis=1)
    w = np.prod([wf[index[:, f]] for f, (_, wf, _) in enumerate(rules)], axis=0)
    spec = {"torus_n": torus_n, "radial_n": radial_n, "angular_n": angular_n, "factors": [[f.kind, f.dim] for f in model.factors]}
    return QuadratureGrid(pts, w, spec, [p for p, _, _ in rules], index, [c for _, _, c in rules])


# ---------------------------------------------------------------------------
# integration


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("KFORGE_THREADS", "1")))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def integrate_fields(
    model: KahlerModel,
    grid: QuadratureGrid,
    scalar: InvariantPolynomial | None = None,
    tensor: InvariantPolynomial | None = None,
    variation: SeparablePotential | None = None,
    eps=0.0,
    chunk: int = CHUNK,
) -> dict:
    """Integrals over ``grid`` with the measure ``det G dLeb`` of the metric ``g + eps h``.

    ``scalar`` integrates ``Xi_P``; ``eps`` may be a sequence, giving one value
    each. ``tensor`` integrates ``<Xi_Q, h>`` at ``eps = 0`` where ``h`` is the
    complex Hessian of ``variation`` written in the unitary frame; the pairing
    is ``sum X[a][b] h[a][b]`` as in :meth:`HermitianTwoTensor.pair`. Exact
    variations pair to zero with this orientation and not with its transpose.
    """
    eps_list = list(np.atleast_1d(np.asarray(eps, dtype=float)))
    scalar_eps = np.ndim(eps) == 0
    if (scalar is not None or tensor is not None) and variation is None and any(e != 0 for e in eps_list):
        raise GeometryError("eps != 0 needs a variation")
    if tensor is not None and variation is None:
        raise GeometryError("the tensor pairing needs a variation")
    factor_points, factor_index, factor_charts = grid.factorization(model)
    if variation is not None:
        validate_potential(model, variation)
    fbase = FactorizedPotential(model, model.potential, factor_points, factor_charts=factor_charts)
    fvar = FactorizedPotential(model, variation, factor_points, factor_charts=factor_charts) if variation is not None else None
    starts = list(range(0, grid.size, chunk))

    def work(start):
        index = factor_index[start : start + chunk]
        w = grid.weights[start : start + chunk]
        base = fbase.arrays(index)
        var = fvar.arrays(index) if fvar is not None else None
        out = {"volume": [], "scalar": [], "pairing": 0.0, "pairing_abs": 0.0}
        for e in eps_list:
            d = base if (var is None or e == 0) else {k: base[k] + e * var[k] for k in base}
            R, T, det = curvature_batch(d)
            out["volume"].append(float(np.sum(det * w)))
            if scalar is not None:
                vals = contractions.poly_scalar(scalar, R)
                out["scalar"].append(complex(np.sum(vals * det * w)))
        if tensor is not None:
            R, T, det = curvature_batch(base)
            X = contractions.poly_tensor(tensor, R)
            h = np.einsum("npa,npq,nqb->nab", T, var["G"], T.conj(), optimize=True)
            dens = np.einsum("nab,nab->n", X, h) * det * w
            out["pairing"] = complex(np.sum(dens))
            out["pairing_abs"] = float(np.sum(np.abs(dens)))
        return out

    parts = _map_ordered(work, starts)
    volume = [math.fsum(p["volume"][i] for p in parts) for i in range(len(eps_list))]
    result = {"volume": volume[0] if scalar_eps else volume}
    if scalar is not None:
        vals = []
        for i in range(len(eps_list)):
            re = math.fsum(p["scalar"][i].real for p in parts)
            im = math.fsum(p["scalar"][i].imag for p in parts)
            vals.append(re if scalar.is_real() else complex(re, im))
        result["scalar"] = vals[0] if scalar_eps else vals
    if tensor is not None:
        re = math.fsum(p["pairing"].real for p in parts)
        im = math.fsum(p["pairing"].imag for p in parts)
        result["pairing"] = re if tensor.is_real() else complex(re, im)
        result["pairing_imag"] = im
        result["pairing_abs"] = math.fsum(p["pairing_abs"] for p in parts)
    return result


def integrate_invariant(model: KahlerModel, grid: QuadratureGrid, field) -> float:
    """``sum field(jets at p) det G(p) w(p)`` point by point; ``field`` maps a JetTable to a real."""
    charts = grid.charts(model)
    total = []
    for p, w, inv in zip(grid.points, grid.weights, charts):
        pot = chart_potential(model, model.potential, np.flatnonzero(inv))
        j = model_jets_at(model, p, potential=pot)
        value = float(field(j))
        if not math.isfinite(value):
            raise GeometryError(f"non-finite field value at {p}")
        G = _derivative_arrays(potential_series(model, pot, p.reshape(1, -1)))["G"][0]
        total.append(value * float(np.linalg.det(G).real) * w)
    return math.fsum(total)


def variation_experiment(m: int, seed: int, kind: str = "product", grid_n: int | None = None, zero_variation: bool = False) -> tuple:
    """Model, variation and grid for comparing the first variation of the action.

    ``kind="product"`` is CP^{m-1} x T^1, where the characteristic classes do
    not vanish; the projective factor of dimension at least 2 gets radial
    perturbations so the radial grid stays exact. ``kind="torus"`` is the flat
    m-torus, where both sides of the comparison vanish. The variation adds a
    multiple of each base potential, so it changes the Kähler class.
    """
    if m < 2:
        raise GeometryError("the variation experiment needs m >= 2")
    if kind == "torus":
        base = torus_model(m)
        grid_n = grid_n or (12 if m == 2 else 6)
        radial = False
        shift = SeparablePotential(flat=tuple((v, 0.3 / (v + 1)) for v in range(m)))
    elif kind == "product":
        base = product_model(("cp", m - 1), ("torus", 1))
        grid_n = grid_n or 12
        radial = m - 1 > 1
        shift = SeparablePotential(flat=((m - 1, 0.3),), fs=((0, 0.2),))
    else:
        raise GeometryError(f"unknown experiment kind {kind!r}")
    model = KahlerModel(base.factors, random_perturbation(base, seed, amplitude=0.05, radial=radial))
    if zero_variation:
        variation = SeparablePotential()
    else:
        terms = random_perturbation(base, seed + 1000, amplitude=0.1, radial=radial)
        variation = SeparablePotential(terms, shift.flat, shift.fs)
    grid = make_grid(model, torus_n=grid_n, radial_n=grid_n, angular_n=grid_n, variation=variation)
    return model, variation, grid


# ---------------------------------------------------------------------------
# characteristic numbers


_CLASSES = {
    "c1": {(1,): 1.0},
    "c1c1": {(1, 1): 1.0},
    "c1^2": {(1, 1): 1.0},
    "c2": {(1, 1): 0.5, (2,): -0.5},
    "tr1": {(1,): 1.0},
    "tr2": {(2,): 1.0},
    "tr1tr1": {(1, 1): 1.0},
    "tr1^2": {(1, 1): 1.0},
}


def class_polynomial(name: str, m: int) -> InvariantPolynomial:
    """``c1 = Tr1``, ``c1c1 = Tr1^2``, ``c2 = (Tr1^2 - Tr2)/2`` and raw trace monomials."""
    key = name.lower()
    if key not in _CLASSES:
        raise GeometryError(f"unknown class {name!r}")
    coeffs = _CLASSES[key]
    k = sum(next(iter(coeffs)))
    if any(max(p) > m for p in coeffs):
        raise GeometryError(f"class {name} is not defined for m={m}")
    return InvariantPolynomial(m, k, coeffs)


def factor_volume(f: Factor, radial_n: int = 200) -> float:
    """Lebesgue integral of ``det G`` over one factor (torus: 1)."""
    if f.kind == "torus":
        return 1.0
    t, w = _unit_rule(radial_n)
    r = t / (1 - t)
    w = w / (1 - t) ** 2
    sphere = 2 * np.pi**f.dim / math.factorial(f.dim - 1)
    return float(np.sum(w * sphere * r ** (2 * f.dim - 1) / (1 + r**2) ** (f.dim + 1)))


def characteristic_number(model: KahlerModel, S: InvariantPolynomial, normalized: bool = False, grid: QuadratureGrid | None = None) -> float:
    """``int S(R)`` over the model; ``normalized`` multiplies by ``(1/2pi)^k``.

    With the conventions of this library ``S(R) = (-2)^m Xi_P(S) det G dLeb``,
    and the factor ``(1/2pi)^k`` turns ``c1`` on the projective line into 2.
    Homogeneous models use the value at the chart origin times the volume
    unless a grid is given.
    """
    m = model.m
    if S.k != m:
        raise GeometryError(f"degree {S.k} does not match dimension {m}")
    if model.is_homogeneous() and grid is None:
        R, _, _ = curvature_batch(_derivative_arrays(potential_series(model, model.potential, np.zeros((1, m)))))
        value = contractions.poly_scalar(S, R)[0]
        volume = math.prod(factor_volume(f) for f in model.factors)
        integral = value * volume
    else:
        grid = grid or make_grid(model)
        integral = integrate_fields(model, grid, scalar=S)["scalar"]
    raw = (-2) ** m * integral
    if normalized:
        raw = raw / (2 * np.pi) ** S.k
    if S.is_real():
        return float(np.real(raw))
    return complex(raw)


KNOWN_CHARACTERISTIC_NUMBERS = {
    ("cp1", "c1"): 2.0,
    ("cp1xcp1", "c1c1"): 8.0,
    ("cp2", "c1c1"): 9.0,
    ("cp2", "c2"): 3.0,
    ("cp1xcp1", "c2"): 4.0,
}


def model_to_json(model: KahlerModel) -> str:
    return json.dumps(model.describe(), sort_keys=True)


def model_from_json(text: str) -> KahlerModel:
    try:
        return KahlerModel.from_dict(json.loads(text))
    except (KeyError, TypeError, ValueError) as exc:
        raise GeometryError(f"malformed model description: {exc}") from None
