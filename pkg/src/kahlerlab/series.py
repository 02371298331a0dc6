"""Truncated power series in ``(z, zbar)`` evaluated at many base points at once.

A :class:`Series` stores, for every base point, the coefficients of
``dz^alpha dzbar^beta`` with ``|alpha| <= D`` and ``|beta| <= D``. Products
drop terms outside that box, so the arithmetic is exact for every coefficient
that is kept. Elementary functions are applied through their Taylor expansion
around the constant term; the nilpotent part has total degree at most ``2D``.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def exponents(m: int, D: int) -> tuple:
    """Multi-indices of degree ``<= D`` in ``m`` variables, ordered by degree."""
    out = []
    for d in range(D + 1):
        for combo in itertools.combinations_with_replacement(range(m), d):
            e = [0] * m
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return tuple(out)


@lru_cache(maxsize=None)
def _tables(m: int, D: int):
    ex = exponents(m, D)
    index = {e: i for i, e in enumerate(ex)}
    n = len(ex)
    one_side = []
    for i, a in enumerate(ex):
        for j, b in enumerate(ex):
            c = tuple(x + y for x, y in zip(a, b))
            if sum(c) <= D:
                one_side.append((i, j, index[c]))
    left, right, out = [], [], []
    for (ih, jh, oh) in one_side:
        for (ia, ja, oa) in one_side:
            left.append(ih * n + ia)
            right.append(jh * n + ja)
            out.append(oh * n + oa)
    left, right, out = map(np.array, (left, right, out))
    order = np.argsort(out, kind="stable")
    left, right, out = left[order], right[order], out[order]
    targets, starts = np.unique(out, return_index=True)
    factorials = np.array([math.prod(math.factorial(x) for x in e) for e in ex], dtype=float)
    return index, left, right, targets, starts, factorials


class Series:
    """Coefficients ``c[p, alpha, beta]`` for ``npts`` base points in ``m`` variables."""

    __slots__ = ("m", "D", "c")

    def __init__(self, m: int, D: int, c: np.ndarray):
        self.m, self.D, self.c = m, D, c

    @property
    def n(self) -> int:
        return len(exponents(self.m, self.D))

    @classmethod
    def constant(cls, m: int, D: int, values, npts: int | None = None) -> "Series":
        values = np.asarray(values, dtype=complex)
        if values.ndim == 0:
            values = np.full(npts, values)
        n = len(exponents(m, D))
        c = np.zeros((values.shape[0], n, n), dtype=complex)
        c[:, 0, 0] = values
        return cls(m, D, c)

    @classmethod
    def variable(cls, m: int, D: int, v: int, points: np.ndarray, conjugate: bool = False) -> "Series":
        """``z_v`` (or ``zbar_v``) expanded around each base point."""
        points = np.asarray(points, dtype=complex)
        s = cls.constant(m, D, np.conj(points[:, v]) if conjugate else points[:, v])
        if D >= 1:
            e = [0] * m
            e[v] = 1
            i = exponents(m, D).index(tuple(e))
            if conjugate:
                s.c[:, 0, i] = 1.0
            else:
                s.c[:, i, 0] = 1.0
        return s

    def value(self) -> np.ndarray:
        return self.c[:, 0, 0]

    def __add__(self, other):
        if isinstance(other, Series):
            return Series(self.m, self.D, self.c + other.c)
        out = self.c.copy()
        out[:, 0, 0] += other
        return Series(self.m, self.D, out)

    __radd__ = __add__

    def __neg__(self):
        return Series(self.m, self.D, -self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Series):
            other = np.asarray(other)
            if other.ndim == 1:
                return Series(self.m, self.D, self.c * other[:, None, None])
            return Series(self.m, self.D, self.c * other)
        n = self.n
        _, left, right, targets, starts, _ = _tables(self.m, self.D)
        x = self.c.reshape(len(self.c), n * n)
        y = other.c.reshape(len(other.c), n * n)
        prod = x[:, left] * y[:, right]
        out = np.zeros_like(x)
        out[:, targets] = np.add.reduceat(prod, starts, axis=1)
        return Series(self.m, self.D, out.reshape(self.c.shape))

    __rmul__ = __mul__

    def conj(self) -> "Series":
        """The series of the complex conjugate function."""
        return Series(self.m, self.D, np.conj(self.c).transpose(0, 2, 1))

    def real_part(self) -> "Series":
        return (self + self.conj()) * 0.5

    def apply(self, derivatives) -> "Series":
        """``f(self)`` from ``derivatives[j] = f^{(j)}(value)``, ``j = 0..2D``."""
        x0 = self.value()
        nil = Series(self.m, self.D, self.c.copy())
        nil.c[:, 0, 0] = 0.0
        out = Series.constant(self.m, self.D, derivatives[0])
        power = None
        for j in range(1, 2 * self.D + 1):
            power = nil if power is None else power * nil
            out = out + power * (derivatives[j] / math.factorial(j))
        return out

    def exp(self) -> "Series":
        e = np.exp(self.value())
        return self.apply([e] * (2 * self.D + 1))

    def log(self) -> "Series":
        x = self.value()
        ders = [np.log(x)] + [(-1) ** (j - 1) * math.factorial(j - 1) / x**j for j in range(1, 2 * self.D + 1)]
        return self.apply(ders)

    def power(self, p: float) -> "Series":
        x = self.value()
        ders, coef = [], 1.0
        for j in range(2 * self.D + 1):
            ders.append(coef * x ** (p - j))
            coef *= p - j
        return self.apply(ders)

    def derivative(self, hol, anti) -> np.ndarray:
        """``d^hol dbar^anti`` of the function at every base point; indices are 0-based variable lists."""
        index, *_, factorials = _tables(self.m, self.D)
        a = [0] * self.m
        b = [0] * self.m
        for v in hol:
            a[v] += 1
        for v in anti:
            b[v] += 1
        i, j = index[tuple(a)], index[tuple(b)]
        return self.c[:, i, j] * factorials[i] * factorials[j]
