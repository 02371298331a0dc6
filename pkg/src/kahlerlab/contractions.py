"""Batched index-sum kernels for the scalar pairing and the transgression.

In a unitary frame the pairing of a trace monomial with a power of the Kähler
form collapses to a signed sum over permutations (a generalized Kronecker
delta). For the monomial ``Tr_pi`` with ``k`` curvature slots,

    xi_P = sum_{sigma in S_k} sgn(sigma) sum_c prod_t R[c_t, c_sigma(t), p_next(t), p_t]

where the ``p`` indices run around the cycles given by the parts of ``pi``. The
transgression adds one more slot carrying the free coframe pair. These
kernels take curvature arrays of shape ``(..., m, m, m, m)`` so that whole
quadrature grids are evaluated at once; they agree with the form-algebra path
to rounding and are tested against it.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

_HOL = "abcdefgh"
_MAT = "ijklmnop"


def _parity(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _cycle_next(parts: tuple) -> list:
    nxt, start = [], 0
    for n in parts:
        for t in range(n):
            nxt.append(start + (t + 1) % n)
        start += n
    return nxt


@lru_cache(maxsize=None)
def _scalar_terms(parts: tuple) -> tuple:
    """``(sign, einsum subscripts)`` for every permutation of the ``k`` slots."""
    k = sum(parts)
    nxt = _cycle_next(parts)
    terms = []
    for sigma in itertools.permutations(range(k)):
        ops = [f"...{_HOL[t]}{_HOL[sigma[t]]}{_MAT[nxt[t]]}{_MAT[t]}" for t in range(k)]
        terms.append((_parity(sigma), ",".join(ops) + "->..."))
    return tuple(terms)


@lru_cache(maxsize=None)
def _tensor_terms(parts: tuple) -> tuple:
    """``(sign, subscripts, diagonal)`` for permutations of ``k + 1`` slots.

    Slot ``k`` carries the coframe pair ``e^alpha ^ ebar^beta``: its
    holomorphic index is ``alpha`` and its anti-holomorphic one ``beta``. When
    the permutation fixes that slot the result is a scalar times the identity.
    """
    k = sum(parts)
    nxt = _cycle_next(parts)
    terms = []
    for sigma in itertools.permutations(range(k + 1)):
        ops = [f"...{_HOL[t]}{_HOL[sigma[t]]}{_MAT[nxt[t]]}{_MAT[t]}" for t in range(k)]
        diagonal = sigma[k] == k
        out = "..." if diagonal else f"...{_HOL[k]}{_HOL[sigma[k]]}"
        if not ops:
            terms.append((_parity(sigma), None, diagonal))
            continue
        terms.append((_parity(sigma), ",".join(ops) + "->" + out, diagonal))
    return tuple(terms)


def _check(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=complex)
    if R.ndim < 4 or len(set(R.shape[-4:])) != 1:
        raise ValueError("curvature must have shape (..., m, m, m, m)")
    return R


def trace_monomial_scalar(parts: tuple, R: np.ndarray) -> np.ndarray:
    """``Xi_P(Tr_parts)`` for a batch of unitary-frame curvature tensors."""
    R = _check(R)
    k = sum(parts)
    m = R.shape[-1]
    out = np.zeros(R.shape[:-4], dtype=complex)
    if k > m:
        return out
    for sign, subs in _scalar_terms(tuple(parts)):
        out = out + sign * np.einsum(subs, *([R] * k), optimize=True)
    return out


def trace_monomial_tensor(parts: tuple, R: np.ndarray) -> np.ndarray:
    """``Xi_Q(Tr_parts)[alpha][beta]`` for a batch; shape ``(..., m, m)``."""
    R = _check(R)
    k = sum(parts)
    m = R.shape[-1]
    batch = R.shape[:-4]
    out = np.zeros(batch + (m, m), dtype=complex)
    if k + 1 > m:
        return out
    eye = np.eye(m)
    for sign, subs, diagonal in _tensor_terms(tuple(parts)):
        val = np.ones(batch, dtype=complex) if subs is None else np.einsum(subs, *([R] * k), optimize=True)
        if diagonal:
            out = out + sign * val[..., None, None] * eye
        else:
            out = out + sign * val
    return out


def poly_scalar(P, R: np.ndarray) -> np.ndarray:
    """``Xi_P(P)`` for an :class:`InvariantPolynomial`, batched."""
    R = _check(R)
    out = np.zeros(R.shape[:-4], dtype=complex)
    for parts, c in P.coeffs.items():
        out = out + c * trace_monomial_scalar(parts, R)
    return out


def poly_tensor(P, R: np.ndarray) -> np.ndarray:
    """``Xi_Q(P)`` for an :class:`InvariantPolynomial`, batched."""
    R = _check(R)
    m = R.shape[-1]
    out = np.zeros(R.shape[:-4] + (m, m), dtype=complex)
    for parts, c in P.coeffs.items():
        out = out + c * trace_monomial_tensor(parts, R)
    return out
