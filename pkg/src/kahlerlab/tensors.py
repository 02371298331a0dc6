"""Dense complex multi-index tensors with role-tagged axes.

Every index array in the library is a :class:`LabeledTensor`: a dense numpy
array of shape ``(dim,) * rank`` together with one :class:`AxisRole` per axis.
The roles decide which axes may be summed against each other, so that an
ill-formed contraction raises instead of silently producing a non-invariant.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Library-wide comparison tolerances (overridable per call).
ATOL = 1e-10
RTOL = 1e-8


class RoleMismatchError(ValueError):
    """Raised when two axes with incompatible roles are paired."""


class DimensionMismatchError(ValueError):
    """Raised when tensors of different extents are combined."""


class AxisRole(enum.Enum):
    HOL_LOWER = "holomorphic-lower"
    ANTIHOL_LOWER = "antiholomorphic-lower"
    HOL_UPPER = "holomorphic-upper"
    ANTIHOL_UPPER = "antiholomorphic-upper"
    REAL = "real"


_COMPATIBLE = {
    frozenset([AxisRole.HOL_LOWER, AxisRole.HOL_UPPER]),
    frozenset([AxisRole.ANTIHOL_LOWER, AxisRole.ANTIHOL_UPPER]),
    # unitary frame: the metric is the identity between z and zbar slots
    frozenset([AxisRole.HOL_LOWER, AxisRole.ANTIHOL_LOWER]),
    frozenset([AxisRole.REAL]),
}


def roles_compatible(a: AxisRole, b: AxisRole) -> bool:
    """Whether an axis of role ``a`` may be summed against one of role ``b``."""
    return frozenset([a, b]) in _COMPATIBLE


@dataclass(frozen=True)
class LabeledTensor:
    """A dense tensor with extent ``dim`` on every axis and a role per axis."""

    dim: int
    roles: tuple
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        roles = tuple(AxisRole(r) for r in self.roles)
        object.__setattr__(self, "roles", roles)
        arr = np.array(self.data, dtype=complex)
        if arr.ndim == 0 and roles:
            raise DimensionMismatchError("scalar data given for a tensor with axes")
        if arr.shape != (self.dim,) * len(roles):
            raise DimensionMismatchError(
                f"data shape {arr.shape} does not match dim={self.dim}, rank={len(roles)}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rank(self) -> int:
        return len(self.roles)

    @classmethod
    def zeros(cls, dim: int, roles: Sequence) -> "LabeledTensor":
        return cls(dim, tuple(roles), np.zeros((dim,) * len(roles), dtype=complex))

    def __add__(self, other: "LabeledTensor") -> "LabeledTensor":
        _check_same_shape(self, other)
        return LabeledTensor(self.dim, self.roles, self.data + other.data)

    def __sub__(self, other: "LabeledTensor") -> "LabeledTensor":
        _check_same_shape(self, other)
        return LabeledTensor(self.dim, self.roles, self.data - other.data)

    def __mul__(self, scalar) -> "LabeledTensor":
        return LabeledTensor(self.dim, self.roles, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "LabeledTensor":
        return LabeledTensor(self.dim, self.roles, -self.data)


@dataclass(frozen=True)
class ContractionSpec:
    """Pairs of ``(tensor_id, axis, tensor_id, axis)`` to sum, plus the free axes.

    ``free`` lists ``(tensor_id, axis)`` in the order they appear in the result.
    """

    pairs: tuple
    free: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        object.__setattr__(self, "free", tuple(tuple(f) for f in self.free))


def _check_same_shape(a: LabeledTensor, b: LabeledTensor):
    if a.dim != b.dim or a.rank != b.rank:
        raise DimensionMismatchError(
            f"shape mismatch: dim {a.dim} vs {b.dim}, rank {a.rank} vs {b.rank}"
        )


def _validate(factors: Sequence[LabeledTensor], spec: ContractionSpec):
    dims = {t.dim for t in factors}
    if len(dims) > 1:
        raise DimensionMismatchError(f"factors have different extents {sorted(dims)}")
    seen = set()
    slots = [(i, ax) for p in spec.pairs for (i, ax) in (p[:2], p[2:])] + list(spec.free)
    for slot in slots:
        i, ax = slot
        if not (0 <= i < len(factors)) or not (0 <= ax < factors[i].rank):
            raise DimensionMismatchError(f"axis {slot} does not exist")
        if slot in seen:
            raise ValueError(f"axis {slot} used more than once")
        seen.add(slot)
    total = sum(t.rank for t in factors)
    if len(seen) != total:
        raise ValueError("every axis must be either paired or listed as free")
    for i, a, j, b in spec.pairs:
        if not roles_compatible(factors[i].roles[a], factors[j].roles[b]):
            raise RoleMismatchError(
                f"cannot contract {factors[i].roles[a].value} with {factors[j].roles[b].value}"
            )


def contract(factors: Sequence[LabeledTensor], spec: ContractionSpec) -> LabeledTensor:
    """Full index sum over the paired axes, one pair at a time.

    Intermediate results are kept as ``(array, labels)`` groups where each label
    is the original ``(tensor_id, axis)``. A pair inside one group becomes a
    trace; a pair across two groups becomes a ``tensordot``. Leftover groups are
    joined by outer products.
    """
    factors = list(factors)
    _validate(factors, spec)
    dim = factors[0].dim if factors else 1
    groups = [(t.data, [(i, ax) for ax in range(t.rank)]) for i, t in enumerate(factors)]
    owner = {lab: g for g, (_, labs) in enumerate(groups) for lab in labs}

    for i, a, j, b in spec.pairs:
        ga, gb = owner[(i, a)], owner[(j, b)]
        arr_a, labs_a = groups[ga]
        if ga == gb:
            x, y = labs_a.index((i, a)), labs_a.index((j, b))
            arr = np.trace(arr_a, axis1=x, axis2=y)
            labs = [lab for lab in labs_a if lab not in ((i, a), (j, b))]
            groups[ga] = (arr, labs)
        else:
            arr_b, labs_b = groups[gb]
            x, y = labs_a.index((i, a)), labs_b.index((j, b))
            arr = np.tensordot(arr_a, arr_b, axes=([x], [y]))
            labs = [lab for lab in labs_a if lab != (i, a)] + [lab for lab in labs_b if lab != (j, b)]
            groups[ga] = (arr, labs)
            groups[gb] = None
            for lab in labs:
                owner[lab] = ga

    arr, labs = np.array(1.0 + 0j), []
    for g in groups:
        if g is None:
            continue
        arr = np.multiply.outer(arr, g[0])
        labs = labs + list(g[1])
    order = [labs.index(tuple(f)) for f in spec.free]
    arr = np.transpose(arr, order) if order else arr
    roles = tuple(factors[i].roles[ax] for i, ax in spec.free)
    return LabeledTensor(dim, roles, arr)


def symmetrize(t: LabeledTensor, axes) -> LabeledTensor:
    """Average ``t`` over all permutations of the listed axes."""
    axes = sorted(set(axes))
    if len({t.roles[a] for a in axes}) > 1:
        raise RoleMismatchError("symmetrized axes must share a role")
    perms = list(itertools.permutations(axes))
    acc = np.zeros_like(t.data)
    for perm in perms:
        order = list(range(t.rank))
        for src, dst in zip(axes, perm):
            order[src] = dst
        acc = acc + np.transpose(t.data, order)
    return LabeledTensor(t.dim, t.roles, acc / len(perms))


def max_abs_diff(a: LabeledTensor, b: LabeledTensor) -> float:
    """Entrywise sup-norm of ``a - b``."""
    if a.dim != b.dim or a.roles != b.roles:
        raise DimensionMismatchError("tensors differ in extent or roles")
    if a.data.size == 0:
        return 0.0
    return float(np.max(np.abs(a.data - b.data)))


def allclose(a, b, atol: float = ATOL, rtol: float = RTOL) -> bool:
    """Library-wide closeness test on arrays or tensors."""
    a = a.data if isinstance(a, LabeledTensor) else np.asarray(a)
    b = b.data if isinstance(b, LabeledTensor) else np.asarray(b)
    return bool(np.allclose(a, b, atol=atol, rtol=rtol))
