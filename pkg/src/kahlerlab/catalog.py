"""Explicit curvature invariants as direct index sums.

Kähler invariants take a :class:`KahlerCurvature` in a unitary frame. Real
invariants (the Pfaffian-type scalars ``E`` and the symmetric 2-tensors ``T``)
take a :class:`RealCurvatureTensor` in an orthonormal frame and follow the
sign convention ``R_{1221} > 0`` on the round sphere, so that ``R_{ijji}`` is
the scalar curvature and ``R_{aija}`` the Ricci tensor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .jets import KahlerCurvature
from .transgression import HermitianTwoTensor

es = np.einsum


class CurvatureSymmetryError(ValueError):
    """Raised when an array lacks the symmetries of a curvature tensor."""


@dataclass(frozen=True)
class RealCurvatureTensor:
    """Components ``R[i][j][k][l]`` in an orthonormal frame of a real ``n``-space."""

    n: int
    R: np.ndarray = field(repr=False)
    check_tol: float = 1e-12

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        if R.shape != (self.n,) * 4:
            raise CurvatureSymmetryError(f"expected shape {(self.n,) * 4}, got {R.shape}")
        R.setflags(write=False)
        object.__setattr__(self, "R", R)
        defect = self.symmetry_defect()
        scale = max(1.0, float(np.max(np.abs(R), initial=0.0)))
        if defect > self.check_tol * scale:
            raise CurvatureSymmetryError(f"curvature symmetries violated by {defect:.3e}")

    def symmetry_defect(self) -> float:
        R = self.R
        if R.size == 0:
            return 0.0
        checks = [
            R + R.transpose(1, 0, 2, 3),
            R + R.transpose(0, 1, 3, 2),
            R - R.transpose(2, 3, 0, 1),
            R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3),
        ]
        return float(max(np.max(np.abs(c)) for c in checks))

    def scale(self) -> float:
        return float(np.max(np.abs(self.R), initial=0.0))


def random_act(n: int, seed: int, terms: int = 3) -> RealCurvatureTensor:
    """Sum of ``terms`` products ``h_il h_jk - h_ik h_jl`` with random symmetric ``h``, random signs."""
    if terms < 0:
        raise ValueError("terms must be non-negative")
    rng = np.random.default_rng(seed)
    R = np.zeros((n,) * 4)
    for _ in range(terms):
        h = rng.standard_normal((n, n))
        h = (h + h.T) / 2
        sign = rng.choice([-1.0, 1.0])
        R += sign * (es("il,jk->ijkl", h, h) - es("ik,jl->ijkl", h, h))
    return RealCurvatureTensor(n, R)


def constant_curvature(n: int, kappa: float = 1.0) -> RealCurvatureTensor:
    """``R_{ijkl} = kappa (delta_il delta_jk - delta_ik delta_jl)``."""
    d = np.eye(n)
    return RealCurvatureTensor(n, kappa * (es("il,jk->ijkl", d, d) - es("ik,jl->ijkl", d, d)))


# ---------------------------------------------------------------------------
# real scalar and 2-tensor invariants


def _e2(R):
    return es("ijji", R)


def _e4(R):
    return es("ijji", R) ** 2 - 4 * es("aija,bijb", R, R) + es("ijkl,ijkl", R, R)


def _e6_printed(R):
    t = es("ijji", R)
    return (
        t**3
        - 12 * t * es("aija,bijb", R, R)
        + 3 * t * es("ijkl,ijkl", R, R)
        + 24 * es("aija,bklb,jlik", R, R, R)
        + 16 * es("aija,bjkb,cikc", R, R, R)
        - 24 * es("aija,jkln,lnik", R, R, R)
        + 2 * es("ijkl,klan,anij", R, R, R)
        - 8 * es("kaij,inkl,jlan", R, R, R)
    )


def _e6(R):
    # same monomials; the signs of the three terms with an uncontracted
    # R R R chain are those that make the sum the sixth-order Pfaffian
    t = es("ijji", R)
    return (
        t**3
        - 12 * t * es("aija,bijb", R, R)
        + 3 * t * es("ijkl,ijkl", R, R)
        - 24 * es("aija,bklb,jlik", R, R, R)
        + 16 * es("aija,bjkb,cikc", R, R, R)
        - 24 * es("aija,jkln,lnik", R, R, R)
        - 2 * es("ijkl,klan,anij", R, R, R)
        + 8 * es("kaij,inkl,jlan", R, R, R)
    )


def e_invariant(T: RealCurvatureTensor, which: int) -> float:
    """The Pfaffian-type scalar ``E_2``, ``E_4`` or ``E_6``; vanishes below real dimension ``which``."""
    funcs = {2: _e2, 4: _e4, 6: _e6}
    if which not in funcs:
        raise ValueError("which must be 2, 4 or 6")
    return float(funcs[which](T.R))


def e6_as_printed(T: RealCurvatureTensor) -> float:
    """The sixth-order combination with the alternative signs; kept for comparison only."""
    return float(_e6_printed(T.R))


def pfaffian_density(T: RealCurvatureTensor, order: int) -> float:
    """``sum_sigma sgn(sigma) prod R_{i_{2t-1} i_{2t} i_sigma(2t) i_sigma(2t-1)}`` divided by ``2^{order/2}``.

    An independent generalized-delta evaluation used as an oracle for ``E``.
    """
    k = order // 2
    if order % 2 or k < 1:
        raise ValueError("order must be a positive even number")
    letters = "abcdefgh"[:order]
    total = 0.0
    for sigma in itertools.permutations(range(order)):
        ops = [letters[2 * t] + letters[2 * t + 1] + letters[sigma[2 * t + 1]] + letters[sigma[2 * t]] for t in range(k)]
        total += _parity(sigma) * es(",".join(ops) + "->", *([T.R] * k))
    return float(total) / 2**k


def _parity(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def t_invariant(T: RealCurvatureTensor, which: int) -> np.ndarray:
    """The symmetric 2-tensors ``T_2`` and ``T_4``; components against ``e_i o e_j``."""
    R, n = T.R, T.n
    eye = np.eye(n)
    if which == 2:
        return es("ijji", R) * eye - 2 * es("ijki->jk", R)
    if which == 4:
        return (
            -0.25 * _e4(R) * eye
            + es("klni,klnj->ij", R, R)
            - 2 * es("knik,lnjl->ij", R, R)
            - 2 * es("iklj,nkln->ij", R, R)
            + es("kllk,nijn->ij", R, R)
        )
    raise ValueError("which must be 2 or 4")


# ---------------------------------------------------------------------------
# Kähler to real


def _real_frame(m: int) -> np.ndarray:
    """Columns are ``(e_a + ebar_a)/sqrt2`` and ``i(e_a - ebar_a)/sqrt2`` in the basis ``(e, ebar)``."""
    s = np.sqrt(2.0)
    F = np.zeros((2 * m, 2 * m), dtype=complex)
    for a in range(m):
        F[a, a] = F[m + a, a] = 1 / s
        F[a, m + a] = 1j / s
        F[m + a, m + a] = -1j / s
    return F


def kahler_to_real(K: KahlerCurvature) -> RealCurvatureTensor:
    """The Riemannian curvature of a Kähler curvature in an orthonormal real frame.

    The complex-multilinear extension has ``R(e_a, ebar_b, ebar_c, e_d) = R[a][b][c][d]``
    and the block symmetries forced by the Kähler identity.
    """
    R = np.asarray(K.R)
    m = K.m
    n = 2 * m
    Rc = np.zeros((n,) * 4, dtype=complex)
    hol = np.arange(m)
    anti = m + np.arange(m)
    ix = np.ix_
    Rc[ix(hol, anti, anti, hol)] = R
    Rc[ix(anti, hol, anti, hol)] = -R.transpose(1, 0, 2, 3)
    Rc[ix(hol, anti, hol, anti)] = -R.transpose(0, 1, 3, 2)
    Rc[ix(anti, hol, hol, anti)] = R.transpose(1, 0, 3, 2)
    F = _real_frame(m)
    Rr = es("IJKL,Ii,Jj,Kk,Ll->ijkl", Rc, F, F, F, F, optimize=True)
    if np.max(np.abs(Rr.imag), initial=0.0) > 1e-9 * max(1.0, float(np.max(np.abs(R), initial=0.0))):
        raise CurvatureSymmetryError("input is not a Kähler curvature tensor")
    return RealCurvatureTensor(n, Rr.real, check_tol=1e-10)


def real_to_hermitian(T: np.ndarray) -> HermitianTwoTensor:
    """A real symmetric 2-tensor on ``R^{2m}`` as ``H[alpha][beta] = T(e_beta, ebar_alpha)``."""
    T = np.asarray(T, dtype=float)
    m = T.shape[0] // 2
    Finv = np.linalg.inv(_real_frame(m))
    Tc = Finv.T @ T @ Finv
    return HermitianTwoTensor(m, Tc[:m, m:].T)


# ---------------------------------------------------------------------------
# Kähler invariants


def ricci(K: KahlerCurvature) -> HermitianTwoTensor:
    """``rho[alpha][beta] = -R[beta][alpha][r][r]``."""
    return HermitianTwoTensor(K.m, -es("barr->ab", K.R))


def scalar_curvature(K: KahlerCurvature) -> float:
    """``tau = -2 R[a][a][r][r]``, the normalization in which ``Q_{m,1} = -tau g / 2 + rho``."""
    return float((-2 * es("aarr", K.R)).real)


def kahler_scalar_identities(K: KahlerCurvature) -> dict:
    """The two quadratic scalar identities and the scalar curvature."""
    R = K.R
    p1 = es("aacd,bbdc", R, R) - es("abcd,badc", R, R)
    p2 = es("aacc,bbdd", R, R) - es("abcc,badd", R, R)
    return {"P1": float(p1.real), "P2": float(p2.real), "tau": scalar_curvature(K)}


def kahler_tensor_identities(K: KahlerCurvature) -> dict:
    """The degree 2 and degree 4 tensor-valued identities as written term by term."""
    R, m = K.R, K.m
    d = np.eye(m)
    q_m1 = es("ccrr", R) * d - es("barr->ab", R)
    q1 = (
        es("aagd,bbdg->", R, R) * d
        + es("acgd,badg->cb", R, R)
        + es("abgd,bcdg->ca", R, R)
        - es("aagd,bcdg->cb", R, R)
        - es("abgd,badg->", R, R) * d
        - es("acgd,bbdg->ca", R, R)
    )
    A = es("abss->ab", R)
    q2 = (
        es("aa,bb->", A, A) * d
        + es("ac,ba->cb", A, A)
        + es("ab,bc->ca", A, A)
        - es("aa,bc->cb", A, A)
        - es("ab,ba->", A, A) * d
        - es("ac,bb->ca", A, A)
    )
    return {
        "Q_m1": HermitianTwoTensor(m, q_m1),
        "Q1_m2": HermitianTwoTensor(m, q1),
        "Q2_m2": HermitianTwoTensor(m, q2),
    }


def closed_forms(K: KahlerCurvature) -> dict:
    """Auxiliary tensors from the real orthonormal frame, mapped back to Hermitian form.

    ``Rcheck_ij = R_abci R_abcj``, ``rhocheck_ij = rho_ai rho_aj``,
    ``L_ij = 2 R_iabj rho_ab``; norms are full sums of squares.
    """
    Rr = kahler_to_real(K).R
    n = Rr.shape[0]
    rho = es("aija->ij", Rr)
    tau = float(np.trace(rho))
    out = {
        "rho": real_to_hermitian(rho),
        "tau": tau,
        "Rcheck": real_to_hermitian(es("abci,abcj->ij", Rr, Rr)),
        "rhocheck": real_to_hermitian(rho.T @ rho),
        "L_rho": real_to_hermitian(2 * es("iabj,ab->ij", Rr, rho)),
        "R_norm2": float(np.sum(Rr**2)),
        "rho_norm2": float(np.sum(rho**2)),
        "g": real_to_hermitian(np.eye(n)),
    }
    return out


def closed_form_tensors(K: KahlerCurvature) -> dict:
    """The right-hand sides of the closed-form expressions for the tensor identities."""
    c = closed_forms(K)
    g, rho, tau = c["g"].H, c["rho"].H, c["tau"]
    Rn, rn = c["R_norm2"], c["rho_norm2"]
    Rch, rch, L = c["Rcheck"].H, c["rhocheck"].H, c["L_rho"].H
    m = K.m
    return {
        "Q_m1": HermitianTwoTensor(m, -0.5 * tau * g + rho),
        "Q1_m2": HermitianTwoTensor(m, (0.5 * rn - 0.25 * Rn) * g + Rch - L),
        "Q2_m2": HermitianTwoTensor(m, 2 * rch - tau * rho - 0.5 * (rn - tau**2 / 2) * g),
        "Q2_minus_Q1": HermitianTwoTensor(m, 0.25 * (Rn - 4 * rn + tau**2) * g - Rch + L + 2 * rch - tau * rho),
    }


def euler_combination_as_printed(K: KahlerCurvature) -> HermitianTwoTensor:
    """The alternative trace coefficient ``(|R|^2 - |rho|^2 + tau^2/4)/4``; kept for comparison only.

    It differs from the difference of the two closed forms above by a multiple of ``g``.
    """
    c = closed_forms(K)
    g, rho, tau = c["g"].H, c["rho"].H, c["tau"]
    Rn, rn = c["R_norm2"], c["rho_norm2"]
    H = 0.25 * (Rn - rn + tau**2 / 4) * g - c["Rcheck"].H + c["L_rho"].H + 2 * c["rhocheck"].H - tau * rho
    return HermitianTwoTensor(K.m, H)


@dataclass(frozen=True)
class KahlerTensorReport:
    name: str
    m: int
    value: HermitianTwoTensor
    deviation: float


def closed_form_report(K: KahlerCurvature) -> list:
    """Term-by-term identities against their closed forms; deviation is the sup-norm difference."""
    direct = kahler_tensor_identities(K)
    direct["Q2_minus_Q1"] = direct["Q2_m2"] - direct["Q1_m2"]
    closed = closed_form_tensors(K)
    return [
        KahlerTensorReport(name, K.m, direct[name], float(np.max(np.abs(direct[name].H - closed[name].H), initial=0.0)))
        for name in ("Q_m1", "Q1_m2", "Q2_m2", "Q2_minus_Q1")
    ]


# ---------------------------------------------------------------------------
# batch verification table

GENERIC_FLOOR = 1e-6


def _sup(x) -> float:
    return float(np.max(np.abs(np.asarray(x)), initial=0.0))


def _kahler_samples(m: int, samples: int, seed: int):
    from .jets import curvature_from_jets, random_jets

    for s in range(samples):
        K = curvature_from_jets(random_jets(m, 2, seed=seed + s))
        yield K, _sup(K.R)


def _real_samples(n: int, samples: int, seed: int):
    for s in range(samples):
        T = random_act(n, seed + s)
        yield T, _sup(T.R)


_KAHLER_SCALAR = {"P1": 2, "P2": 2}
_KAHLER_TENSOR = {"Q_m1": 1, "Q1_m2": 2, "Q2_m2": 2}
_REAL = {
    "E4": (lambda T: e_invariant(T, 4), 2),
    "E6": (lambda T: e_invariant(T, 6), 3),
    "T2": (lambda T: t_invariant(T, 2), 1),
    "T4": (lambda T: t_invariant(T, 4), 2),
}
# (name, dimension where it vanishes); the genericity check runs one dimension up
_VANISHING = [("P1", 1), ("P2", 1), ("Q_m1", 1), ("Q1_m2", 2), ("Q2_m2", 2), ("E4", 3), ("E6", 5), ("T2", 2), ("T4", 4)]
_CLOSED_DEGREE = {"Q_m1": 1, "Q1_m2": 2, "Q2_m2": 2, "Q2_minus_Q1": 2}


def _kahler_values(name: str, K: KahlerCurvature):
    if name in _KAHLER_SCALAR:
        return kahler_scalar_identities(K)[name]
    return kahler_tensor_identities(K)[name].H


def _measure(name: str, dim: int, samples: int, seed: int) -> float:
    """Largest ``|value| / scale^degree`` over the samples."""
    worst = 0.0
    if name in _REAL:
        fn, deg = _REAL[name]
        for T, scale in _real_samples(dim, samples, seed):
            worst = max(worst, _sup(fn(T)) / scale**deg)
    else:
        deg = _KAHLER_SCALAR.get(name) or _KAHLER_TENSOR[name]
        for K, scale in _kahler_samples(dim, samples, seed):
            worst = max(worst, _sup(_kahler_values(name, K)) / scale**deg)
    return worst


def _closed_deviation(name: str, m: int, samples: int, seed: int) -> float:
    """Largest sup-norm deviation from the closed form, relative to ``scale^degree``."""
    worst = 0.0
    deg = _CLOSED_DEGREE[name]
    for K, scale in _kahler_samples(m, samples, seed):
        dev = next(r.deviation for r in closed_form_report(K) if r.name == name)
        worst = max(worst, dev / scale**deg)
    return worst


def identity_table(dim: int | None = None, samples: int = 50, seed: int = 0, tol: float = 1e-9) -> list:
    """Vanishing, genericity and closed-form checks as a list of result dicts.

    ``dim=None`` runs everything: each identity in its vanishing dimension,
    the same identity one dimension up (must be nonzero somewhere), and the
    closed forms at complex dimension 3. An integer ``dim`` runs only the
    tensor-valued Kähler identities at that complex dimension. A check passes
    when its normalized value is strictly below ``tol``, so ``tol = 0`` fails.
    """
    rows = []

    def vanish(name, d):
        v = _measure(name, d, samples, seed)
        rows.append({"check": f"{name} vanishes", "dim": d, "value": v, "tol": tol, "passed": v < tol})

    def generic(name, d):
        v = _measure(name, d, samples, seed)
        rows.append({"check": f"{name} generically nonzero", "dim": d, "value": v, "tol": GENERIC_FLOOR, "passed": v > GENERIC_FLOOR})

    def closed(name, d):
        v = _closed_deviation(name, d, samples, seed)
        rows.append({"check": f"{name} closed form", "dim": d, "value": v, "tol": tol, "passed": v < tol})

    if dim is None:
        for name, d in _VANISHING:
            vanish(name, d)
            generic(name, d + 1)
        for name in _CLOSED_DEGREE:
            closed(name, 3)
        return rows
    if dim < 1:
        raise ValueError("dim must be positive")
    for name, d in (("Q_m1", 1), ("Q1_m2", 2), ("Q2_m2", 2)):
        if dim == d:
            vanish(name, dim)
        elif dim == d + 1:
            generic(name, dim)
    for name in _CLOSED_DEGREE:
        if dim >= 2 and (name == "Q_m1" or dim >= 3):
            closed(name, dim)
    return rows
