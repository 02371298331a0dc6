"""The scalar pairing, the transgression, the action and its first variation.

``xi_P`` and ``xi_Q`` follow the form-algebra definitions literally (wedge,
then pair with a power of the Kähler form). The batched kernels in
:mod:`kahlerlab.contractions` compute the same quantities by index sums and
are used wherever many points are needed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import contractions
from .forms import PQForm, curvature_form_matrix, form_inner_product, omega_power, wedge
from .invariants import InvariantPolynomial, evaluate_poly
from .jets import JetTable, KahlerCurvature, curvature_from_jets


class TransgressionError(ValueError):
    """Raised when a degree is out of range for the dimension."""


@dataclass(frozen=True)
class HermitianTwoTensor:
    """Component ``H[alpha][beta]`` against ``e_alpha o ebar_beta`` in a unitary frame."""

    m: int
    H: np.ndarray = field(repr=False)

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        if H.shape != (self.m, self.m):
            raise ValueError(f"expected shape {(self.m, self.m)}, got {H.shape}")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.H - self.H.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.hermitian_defect() <= tol * max(1.0, float(np.max(np.abs(self.H), initial=0.0)))

    def pair(self, h: np.ndarray) -> complex:
        """``<self, h>`` with ``<e_alpha o ebar_beta, h> = h[alpha][beta]``."""
        return complex(np.sum(self.H * np.asarray(h)))

    def __sub__(self, other: "HermitianTwoTensor") -> "HermitianTwoTensor":
        return HermitianTwoTensor(self.m, self.H - other.H)


def _curvature(j) -> KahlerCurvature:
    return j if isinstance(j, KahlerCurvature) else curvature_from_jets(j)


def _real_if_real(P: InvariantPolynomial, value: complex, scale: float):
    if P.is_real():
        if abs(value.imag) > 1e-10 * max(1.0, scale):
            raise TransgressionError(f"real polynomial gave imaginary part {value.imag:.3e}")
        return float(value.real)
    return value


def xi_P(S: InvariantPolynomial, j) -> float:
    """``(1/k!) g(S(R), Omega^k)`` at the point described by ``j``.

    ``j`` is a :class:`JetTable` (normalized on the fly) or a
    :class:`KahlerCurvature`. Real polynomials return a float.
    """
    K = _curvature(j)
    m, k = K.m, S.k
    if k > m:
        raise TransgressionError(f"degree {k} exceeds dimension {m}")
    form = evaluate_poly(S, curvature_form_matrix(K))
    omega = PQForm.from_hermitian(np.eye(m))
    value = form_inner_product(form, omega_power(omega, k)) / math.factorial(k)
    scale = float(np.max(np.abs(K.R), initial=0.0)) ** k
    return _real_if_real(S, complex(value), scale)


def xi_Q(S: InvariantPolynomial, j) -> HermitianTwoTensor:
    """``(1/(k+1)!) g(S(R) ^ e^alpha ^ ebar^beta, Omega^{k+1}) e_alpha o ebar_beta``.

    The coframe pair enters through the same ``-i`` rule that builds Omega
    and the curvature matrix.
    """
    K = _curvature(j)
    m, k = K.m, S.k
    if k + 1 > m:
        raise TransgressionError(f"degree {k} needs dimension at least {k + 1}, got {m}")
    form = evaluate_poly(S, curvature_form_matrix(K))
    top = omega_power(PQForm.from_hermitian(np.eye(m)), k + 1)
    H = np.zeros((m, m), dtype=complex)
    for a in range(m):
        for b in range(m):
            X = np.zeros((m, m))
            X[a, b] = 1.0
            H[a, b] = form_inner_product(wedge(form, PQForm.from_hermitian(X)), top)
    return HermitianTwoTensor(m, H / math.factorial(k + 1))


def xi_P_fast(S: InvariantPolynomial, R: np.ndarray) -> np.ndarray:
    """Index-sum version of :func:`xi_P` on a batch of curvature arrays."""
    return contractions.poly_scalar(S, R)


def xi_Q_fast(S: InvariantPolynomial, R: np.ndarray) -> np.ndarray:
    """Index-sum version of :func:`xi_Q` on a batch of curvature arrays."""
    return contractions.poly_tensor(S, R)


# ---------------------------------------------------------------------------
# action and first variation


@dataclass
class ELReport:
    """Finite-difference derivative of the action against the transgression pairing."""

    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    scale: float
    richardson_spread: float
    step: float
    grid: dict
    model: dict
    variation: dict
    polynomial: dict
    degenerate: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-30)


def action_integral(S: InvariantPolynomial, k: int, model, grid, variation=None, eps: float = 0.0) -> float:
    """``int Xi_P(S) dnu`` over ``model`` on ``grid``; the metric may be ``g + eps h``."""
    from .geometry import integrate_fields

    if S.k != k:
        raise TransgressionError("k does not match the degree of S")
    if k > model.m:
        raise TransgressionError(f"degree {k} exceeds dimension {model.m}")
    return integrate_fields(model, grid, scalar=S, variation=variation, eps=eps)["scalar"]


def euler_lagrange_check(S: InvariantPolynomial, k: int, model, variation, grid, step: float = 1e-4) -> ELReport:
    """Compare ``d/d eps`` of the action with ``int <Xi_Q(S), h> dnu``.

    ``variation`` is a potential whose complex Hessian is ``h``. The derivative
    is a central difference; the spread of the estimates at ``2 step``,
    ``step`` and ``step / 2`` is reported as a consistency measure. When both
    sides vanish (flat tori) the report is marked degenerate and
    ``details["scale_normalized_err"]`` is the figure to look at.
    """
    from .geometry import integrate_fields

    if S.k != k:
        raise TransgressionError("k does not match the degree of S")
    if k + 1 > model.m:
        raise TransgressionError(f"transgression of degree {k} needs m > {k}")
    if step <= 0:
        raise TransgressionError("step must be positive")

    steps = [2 * step, step, step / 2]
    eps = [e for s_ in steps for e in (s_, -s_)]
    values = integrate_fields(model, grid, scalar=S, variation=variation, eps=eps)["scalar"]
    estimates = [(values[2 * i] - values[2 * i + 1]) / (2 * s_) for i, s_ in enumerate(steps)]
    lhs = estimates[1]
    base = integrate_fields(model, grid, tensor=S, variation=variation, eps=0.0)
    rhs = base["pairing"]
    scale = base["pairing_abs"]
    spread = max(estimates) - min(estimates)
    # a flat torus has vanishing Chern classes, so both sides are zero and only
    # the error measured against the size of the integrand is meaningful
    flat = all(f.kind == "torus" for f in getattr(model, "factors", ()))
    degenerate = flat or max(abs(lhs), abs(rhs)) <= 1e-8 * max(1.0, scale)
    return ELReport(
        lhs=float(lhs),
        rhs=float(rhs),
        abs_err=float(abs(lhs - rhs)),
        rel_err=float(relative_error(lhs, rhs)),
        scale=float(scale),
        richardson_spread=float(spread),
        step=float(step),
        grid=grid.describe(),
        model=model.describe(),
        variation=variation.describe(),
        polynomial={"k": S.k, "terms": [[list(p), c.real, c.imag] for p, c in S.coeffs.items()]},
        degenerate=bool(degenerate),
        details={
            "estimates": [float(e) for e in estimates],
            "halving_change": float(abs(estimates[1] - estimates[2])),
            "scale_normalized_err": float(abs(lhs - rhs) / max(scale, 1e-300)),
            "pairing_imag": float(base["pairing_imag"]),
        },
    )
