"""Contraction-pattern invariants, their spans and restriction kernels.

A pattern with ``k`` curvature factors pairs every holomorphic slot with an
anti-holomorphic slot; paired slots carry a common summed index in a unitary
frame. Factor ``t`` contributes holomorphic slots ``2t`` (axis 0) and ``2t+1``
(axis 3) and anti-holomorphic slots ``2t`` (axis 1) and ``2t+1`` (axis 2).

Tensor-valued patterns add one extra slot on each side (index ``2k``). The
extra left slot mapped to a curvature anti-holomorphic slot puts the free
index ``alpha`` there; a curvature holomorphic slot mapped to the extra right
slot carries the free index ``beta``; the two extra slots paired with each
other give ``delta_{alpha beta}`` times a scalar. The value is ``H[alpha][beta]``.

Spans and kernels are numerical ranks of evaluation matrices on random
normalized jets, over the complex numbers.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from . import contractions
from .invariants import InvariantPolynomial, partitions, rho
from .jets import JetTable, curvature_from_jets, product_with_torus, random_jets

RANK_CUTOFF = 1e-8
SAMPLE_FACTOR = 4


class PatternError(ValueError):
    """Raised for unsupported pattern requests."""


class RankInstabilityError(RuntimeError):
    """Raised when a numerical rank changes under a tenfold cutoff change or a new seed."""


@dataclass(frozen=True)
class ContractionPattern:
    """``slot_map[l] = r`` pairs left (holomorphic) slot ``l`` with right slot ``r``."""

    k: int
    slot_map: tuple
    valued: str = "scalar"
    order3: bool = False

    def __post_init__(self):
        if self.valued not in ("scalar", "tensor"):
            raise PatternError("valued must be 'scalar' or 'tensor'")
        n = self.n_slots
        if sorted(self.slot_map) != list(range(n)):
            raise PatternError(f"slot map {self.slot_map} is not a bijection of {n} slots")

    @property
    def n_slots(self) -> int:
        if self.order3:
            return 3
        return 2 * self.k + (1 if self.valued == "tensor" else 0)

    def degree_profile(self) -> tuple:
        """Holomorphic and anti-holomorphic index counts; equal by construction."""
        return (self.n_slots, self.n_slots)

    def label(self) -> str:
        if self.order3:
            return "g(abc;abc)"
        return f"{self.valued}:{'-'.join(map(str, self.slot_map))}"


def _group_elements(k: int):
    """All (factor permutation, hol swaps, antihol swaps) as slot relabelings."""
    for perm in itertools.permutations(range(k)):
        for hs in itertools.product((0, 1), repeat=k):
            for As in itertools.product((0, 1), repeat=k):
                left = [2 * perm[t] + (i ^ hs[t]) for t in range(k) for i in (0, 1)]
                right = [2 * perm[t] + (j ^ As[t]) for t in range(k) for j in (0, 1)]
                yield left, right


def _canonical(slot_map: tuple, k: int, tensor: bool) -> tuple:
    best = None
    for left, right in _group_elements(k):
        if tensor:
            left = left + [2 * k]
            right = right + [2 * k]
        image = [0] * len(slot_map)
        for l, r in enumerate(slot_map):
            image[left[l]] = right[r]
        image = tuple(image)
        if best is None or image < best:
            best = image
    return best


def enumerate_patterns(k: int, valued: str = "scalar", include_order3: bool = False) -> list:
    """Canonical representatives of all slot pairings of ``k`` curvature factors."""
    if valued == "scalar" and not 1 <= k <= 3:
        raise PatternError("scalar patterns are supported for k in 1..3")
    if valued == "tensor" and not 1 <= k <= 2:
        raise PatternError("tensor patterns are supported for k in 1..2")
    if valued not in ("scalar", "tensor"):
        raise PatternError("valued must be 'scalar' or 'tensor'")
    if include_order3 and (k != 2 or valued != "scalar"):
        raise PatternError("the order-3 pattern is only offered for scalar k=2")
    tensor = valued == "tensor"
    n = 2 * k + (1 if tensor else 0)
    seen = set()
    for raw in itertools.permutations(range(n)):
        seen.add(_canonical(raw, k, tensor))
    out = [ContractionPattern(k, c, valued) for c in sorted(seen)]
    if include_order3:
        out.append(ContractionPattern(k, (0, 1, 2), "scalar", order3=True))
    return out


def orbit_count(k: int, valued: str = "scalar") -> int:
    """Number of orbits by explicit orbit closure (independent of the canonical form)."""
    tensor = valued == "tensor"
    n = 2 * k + (1 if tensor else 0)
    group = []
    for left, right in _group_elements(k):
        if tensor:
            left, right = left + [2 * k], right + [2 * k]
        group.append((left, right))
    remaining = set(itertools.permutations(range(n)))
    orbits = 0
    while remaining:
        start = remaining.pop()
        orbits += 1
        for left, right in group:
            image = [0] * n
            for l, r in enumerate(start):
                image[left[l]] = right[r]
            remaining.discard(tuple(image))
    return orbits


_LETTERS = "abcdefghijklmnopqrstuvw"


def _subscripts(p: ContractionPattern) -> str:
    k = p.k
    tensor = p.valued == "tensor"
    hol = [""] * (2 * k)
    anti = [""] * (2 * k)
    out = ""
    letters = iter(_LETTERS)
    alpha, beta = "x", "y"
    for l, r in enumerate(p.slot_map):
        if tensor and l == 2 * k and r == 2 * k:
            out = "delta"
            continue
        if tensor and l == 2 * k:
            anti[r] = alpha
        elif tensor and r == 2 * k:
            hol[l] = beta
        else:
            c = next(letters)
            hol[l] = c
            anti[r] = c
    ops = [f"...{hol[2 * t]}{anti[2 * t]}{anti[2 * t + 1]}{hol[2 * t + 1]}" for t in range(k)]
    if not tensor:
        return ",".join(ops) + "->..."
    if out == "delta":
        return ",".join(ops) + "->...|delta"
    return ",".join(ops) + "->...xy"


def order3_array(j: JetTable) -> np.ndarray:
    """``S[a,b,c,d,e,f] = g((a,b,c);(d,e,f))`` from normalized order-3 jets."""
    if j.max_order < 3:
        raise PatternError("the order-3 pattern needs jets of order 3")
    m = j.m
    S = np.zeros((m,) * 6, dtype=complex)
    for idx in itertools.product(range(m), repeat=6):
        A = tuple(i + 1 for i in idx[:3])
        B = tuple(i + 1 for i in idx[3:])
        S[idx] = j.get(A, B)
    return S


def evaluate_pattern(p: ContractionPattern, R: np.ndarray, order3: np.ndarray | None = None) -> np.ndarray:
    """Value of ``p`` on a batch of unitary-frame curvatures ``(..., m, m, m, m)``.

    Scalar patterns return shape ``(...)``, tensor patterns ``(..., m, m)``.
    The order-3 pattern reads ``order3`` arrays of shape ``(..., m, ..., m)``.
    """
    if p.order3:
        if order3 is None:
            raise PatternError("the order-3 pattern needs order-3 jets")
        return np.einsum("...abcabc->...", order3)
    R = np.asarray(R, dtype=complex)
    subs = _subscripts(p)
    if subs.endswith("|delta"):
        m = R.shape[-1]
        scalar = np.einsum(subs[: -len("|delta")], *([R] * p.k), optimize=True)
        return scalar[..., None, None] * np.eye(m)
    return np.einsum(subs, *([R] * p.k), optimize=True)


# ---------------------------------------------------------------------------
# sampling and ranks


def _samples(m: int, n_samples: int, seed: int, support: int | None = None, order: int = 2):
    """Curvature batch (and order-3 batch) of random jets supported on the first ``support`` indices."""
    support = m if support is None else support
    Rs, S3 = [], []
    for s in range(n_samples):
        if support == 0:
            j = JetTable(m, order, {((a,), (a,)): 1.0 + 0j for a in range(1, m + 1)})
        else:
            j = random_jets(support, order, seed=seed * 100003 + s)
            if support < m:
                j = product_with_torus(j, m - support)
        Rs.append(curvature_from_jets(j).R)
        if order >= 3:
            S3.append(order3_array(j))
    return np.array(Rs), (np.array(S3) if S3 else None)


def evaluation_matrix(patterns, R: np.ndarray, order3=None, block: int | None = None) -> np.ndarray:
    """Rows are patterns, columns are samples (flattened tensor entries for tensor patterns).

    ``block`` keeps only the leading ``block x block`` entries of tensor values,
    which is the pull-back to the first ``block`` directions.
    """
    rows = []
    for p in patterns:
        v = evaluate_pattern(p, R, order3)
        if p.valued == "tensor" and block is not None:
            v = v[..., :block, :block]
        rows.append(v.reshape(-1))
    if not rows:
        return np.zeros((0, R.shape[0]))
    return np.array(rows)


def numerical_rank(M: np.ndarray, cutoff: float = RANK_CUTOFF) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > cutoff * s[0]))


def stable_rank(M: np.ndarray) -> int:
    """Rank at the standard cutoff, checked against cutoffs ten times larger and smaller."""
    ranks = {numerical_rank(M, RANK_CUTOFF * f) for f in (10.0, 1.0, 0.1)}
    if len(ranks) != 1:
        raise RankInstabilityError(f"rank depends on the cutoff: {sorted(ranks)}")
    return ranks.pop()


def _order(patterns) -> int:
    return 3 if any(p.order3 for p in patterns) else 2


def span_dimension(patterns, m: int, samples: int | None = None, seed: int = 0) -> int:
    """Numerical rank of the pattern-by-sample evaluation matrix on random dimension-``m`` jets."""
    patterns = list(patterns)
    if not patterns:
        return 0
    samples = samples or SAMPLE_FACTOR * len(patterns)
    if samples < 2 * len(patterns):
        raise PatternError("need at least twice as many samples as patterns")
    R, S3 = _samples(m, samples, seed, order=_order(patterns))
    return stable_rank(evaluation_matrix(patterns, R, S3))


def _restricted_dim(k: int, valued: str) -> int:
    return k - 1 if valued == "scalar" else k


def kernel_dimension(patterns, k: int, m: int, valued: str = "scalar", seed: int = 0) -> int:
    """``rank(full samples) - rank(samples supported in dimension k-1 (scalar) or k (tensor))``.

    Tensor values on restricted samples keep only the block of the supporting
    directions.

    Two seeds are compared; disagreement raises :class:`RankInstabilityError`.
    """
    dims = []
    for s in (seed, seed + 1):
        dims.append(_kernel_data(list(patterns), k, m, valued, s)["kernel_dim"])
    if dims[0] != dims[1]:
        raise RankInstabilityError(f"kernel dimension differs between seeds: {dims}")
    return dims[0]


def _kernel_data(patterns, k, m, valued, seed) -> dict:
    n = _restricted_dim(k, valued)
    if m <= n:
        raise PatternError(f"need m > {n} for {valued} kernels of degree {k}")
    samples = SAMPLE_FACTOR * len(patterns)
    order = _order(patterns)
    R, S3 = _samples(m, samples, seed, order=order)
    Rr, S3r = _samples(m, samples, seed + 7919, support=n, order=order)
    M = evaluation_matrix(patterns, R, S3)
    Mr = evaluation_matrix(patterns, Rr, S3r, block=n)
    full, restricted = stable_rank(M), stable_rank(Mr)
    return {
        "M": M,
        "Mr": Mr,
        "R": R,
        "Rr": Rr,
        "rank_full": full,
        "rank_restricted": restricted,
        "kernel_dim": full - restricted,
        "singular_values": np.linalg.svd(M, compute_uv=False).tolist() if M.size else [],
    }


def _null_left(M: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of ``{c : c^T M = 0}``."""
    if M.shape[0] == 0:
        return np.zeros((0, 0))
    u, s, _ = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > RANK_CUTOFF * s[0])) if s.size and s[0] > 0 else 0
    return u[:, r:].conj()


@dataclass
class SpanReport:
    k: int
    m: int
    valued: str
    pattern_count: int
    rank_full: int
    rank_restricted: int
    kernel_dim: int
    rho: int
    residuals: dict
    restricted_residuals: dict
    min_singular_value: float
    order3_coefficient: float | None = None
    singular_values: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        ok = self.kernel_dim == self.rho
        ok = ok and all(r < 1e-8 for r in self.residuals.values())
        ok = ok and all(r < 1e-8 for r in self.restricted_residuals.values())
        ok = ok and self.min_singular_value > 1e-6
        if self.order3_coefficient is not None:
            ok = ok and self.order3_coefficient < 1e-8
        return ok

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _xi_values(parts, R, valued, block=None):
    P = InvariantPolynomial.monomial(R.shape[-1], parts)
    if valued == "scalar":
        return contractions.poly_scalar(P, R).reshape(-1)
    H = contractions.poly_tensor(P, R)
    if block is not None:
        H = H[..., :block, :block]
    return H.reshape(-1)


def verify_xi_spans(k: int, m: int, valued: str = "scalar", include_order3: bool = False, seed: int = 0) -> SpanReport:
    """Certify numerically that the images of ``Tr_pi`` span the restriction kernel.

    Each ``Xi(Tr_pi)`` is expressed in pattern coordinates by least squares;
    the residual is relative to the norm of its sample values. The restricted
    residual is the size of ``Xi`` on restricted samples. Independence is the
    smallest singular value of the row-normalized coefficient matrix.
    """
    patterns = enumerate_patterns(k, valued, include_order3)
    data = _kernel_data(patterns, k, m, valued, seed)
    M, Mr, R, Rr = data["M"], data["Mr"], data["R"], data["Rr"]
    residuals, restricted, coeffs = {}, {}, []
    for parts in partitions(k):
        if max(parts) > m:
            continue
        xi = _xi_values(parts, R, valued)
        c, *_ = np.linalg.lstsq(M.T, xi, rcond=None)
        key = "Tr" + ".".join(map(str, parts))
        residuals[key] = float(np.linalg.norm(M.T @ c - xi) / max(np.linalg.norm(xi), 1e-300))
        xr = _xi_values(parts, Rr, valued, block=_restricted_dim(k, valued))
        restricted[key] = float(np.linalg.norm(xr) / max(np.linalg.norm(xi), 1e-300))
        coeffs.append(c / np.linalg.norm(c))
    C = np.array(coeffs)
    smin = float(np.linalg.svd(C, compute_uv=False).min()) if C.size else 0.0
    order3 = None
    if include_order3:
        Nr = _null_left(Mr)
        Nf = _null_left(M)
        if Nf.size:
            Nr = Nr - Nf @ (Nf.conj().T @ Nr)
        idx = [i for i, p in enumerate(patterns) if p.order3][0]
        u, s, _ = np.linalg.svd(Nr, full_matrices=False) if Nr.size else (np.zeros((len(patterns), 0)), np.zeros(0), None)
        basis = u[:, s > 1e-8] if s.size else u
        order3 = float(np.max(np.abs(basis[idx]), initial=0.0))
    return SpanReport(
        k=k,
        m=m,
        valued=valued,
        pattern_count=len(patterns),
        rank_full=data["rank_full"],
        rank_restricted=data["rank_restricted"],
        kernel_dim=data["kernel_dim"],
        rho=rho(k),
        residuals=residuals,
        restricted_residuals=restricted,
        min_singular_value=smin,
        order3_coefficient=order3,
        singular_values=data["singular_values"],
    )
