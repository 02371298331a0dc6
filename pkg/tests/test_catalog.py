import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerlab.catalog import (
    CurvatureSymmetryError,
    RealCurvatureTensor,
    closed_form_report,
    closed_form_tensors,
    closed_forms,
    constant_curvature,
    e6_as_printed,
    e_invariant,
    euler_combination_as_printed,
    identity_table,
    kahler_scalar_identities,
    kahler_tensor_identities,
    kahler_to_real,
    pfaffian_density,
    random_act,
    ricci,
    scalar_curvature,
    t_invariant,
)
from kahlerlab.jets import curvature_from_jets, curvature_in_frame, prescribe_jets, random_jets, random_unitary

seeds = st.integers(0, 2**32 - 1)


def sup(x):
    return float(np.max(np.abs(np.asarray(x)), initial=0.0))


def e4_by_loops(R):
    n = R.shape[0]
    r = range(n)
    t = sum(R[i, j, j, i] for i in r for j in r)
    ric = [[sum(R[a, i, j, a] for a in r) for j in r] for i in r]
    ric2 = sum(ric[i][j] ** 2 for i in r for j in r)
    full = sum(R[i, j, k, l] ** 2 for i in r for j in r for k in r for l in r)
    return t * t - 4 * ric2 + full


def random_orthogonal(n, seed):
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def rotate(T, O):
    return RealCurvatureTensor(T.n, np.einsum("abcd,ai,bj,ck,dl->ijkl", T.R, O, O, O, O), check_tol=1e-10)


# -- real tensors


def test_random_act_examples():
    assert np.all(random_act(3, 0, terms=0).R == 0)
    assert constant_curvature(2).R[0, 1, 1, 0] == 1
    T = random_act(4, 1)
    assert T.symmetry_defect() <= 1e-12 * T.scale()
    with pytest.raises(CurvatureSymmetryError):
        RealCurvatureTensor(2, np.ones((2, 2, 2, 2)))


def test_flat_real_invariants_vanish():
    flat = random_act(4, 0, terms=0)
    assert e_invariant(flat, 2) == e_invariant(flat, 4) == e_invariant(flat, 6) == 0
    assert sup(t_invariant(flat, 2)) == sup(t_invariant(flat, 4)) == 0


@pytest.mark.parametrize("seed", range(5))
def test_e4_matches_loop_oracle(seed):
    T = random_act(4, seed)
    assert e_invariant(T, 4) == pytest.approx(e4_by_loops(T.R), rel=1e-12)


@pytest.mark.parametrize("n,order", [(4, 4), (6, 6), (3, 4), (2, 2), (5, 2)])
def test_e_invariants_are_pfaffian_densities(n, order):
    T = random_act(n, 3)
    scale = T.scale() ** (order // 2)
    assert abs(e_invariant(T, order) - pfaffian_density(T, order)) < 1e-10 * max(1, scale)


def test_constant_curvature_e_values():
    # E_2 = n(n-1), E_4 = n(n-1)(n-2)(n-3) for the unit sphere curvature
    assert e_invariant(constant_curvature(4), 2) == pytest.approx(12)
    assert e_invariant(constant_curvature(4), 4) == pytest.approx(24)
    assert e_invariant(constant_curvature(6), 6) == pytest.approx(720)


def test_t2_is_trace_adjusted_ricci():
    T = random_act(3, 5)
    R = T.R
    ric = np.array([[sum(R[a, i, j, a] for a in range(3)) for j in range(3)] for i in range(3)])
    tau = np.trace(ric)
    assert sup(t_invariant(T, 2) - (tau * np.eye(3) - 2 * ric)) < 1e-12 * max(1, sup(R))


def test_vanishing_in_low_dimension():
    for s in range(20):
        T2, T4, T3, T5 = random_act(2, s), random_act(4, s), random_act(3, s), random_act(5, s)
        assert sup(t_invariant(T2, 2)) <= 1e-9 * T2.scale()
        assert sup(t_invariant(T4, 4)) <= 1e-9 * T4.scale() ** 2
        assert abs(e_invariant(T3, 4)) <= 1e-9 * T3.scale() ** 2
        assert abs(e_invariant(T5, 6)) <= 1e-9 * T5.scale() ** 3


def test_printed_sixth_order_signs_do_not_vanish_in_dimension_five():
    # the alternative signs fail the vanishing identity; the corrected ones pass
    T = random_act(5, 0)
    assert abs(e6_as_printed(T)) > 1e-3 * T.scale() ** 3
    assert abs(e_invariant(T, 6)) < 1e-9 * T.scale() ** 3


@given(seeds)
def test_real_invariants_are_orthogonally_invariant(seed):
    T = random_act(4, seed)
    O = random_orthogonal(4, seed)
    Tr = rotate(T, O)
    s = T.scale() ** 2
    assert abs(e_invariant(Tr, 4) - e_invariant(T, 4)) < 1e-9 * max(1, s)
    for which, deg in ((2, 1), (4, 2)):
        lhs = t_invariant(Tr, which)
        rhs = O.T @ t_invariant(T, which) @ O
        assert sup(lhs - rhs) < 1e-9 * max(1, T.scale() ** deg)


# -- Kähler invariants


def test_fubini_study_values():
    K = curvature_from_jets(prescribe_jets(1, 2, {((1, 1), (1, 1)): -2.0}))
    assert scalar_curvature(K) == 4.0
    assert ricci(K).H[0, 0] == 2.0


def test_flat_kahler_invariants_vanish():
    K = curvature_from_jets(prescribe_jets(3, 2))
    assert all(v == 0 for v in kahler_scalar_identities(K).values())
    assert all(sup(v.H) == 0 for v in kahler_tensor_identities(K).values())
    c = closed_forms(K)
    assert c["tau"] == 0 and c["R_norm2"] == 0 and sup(c["Rcheck"].H) == 0


def test_low_dimensional_vanishing():
    for s in range(20):
        K1 = curvature_from_jets(random_jets(1, 2, seed=s))
        sc = kahler_scalar_identities(K1)
        assert sc["P1"] == 0 and sc["P2"] == 0
        assert sup(kahler_tensor_identities(K1)["Q_m1"].H) < 1e-12 * sup(K1.R)
        K2 = curvature_from_jets(random_jets(2, 2, seed=s))
        t = kahler_tensor_identities(K2)
        assert sup(t["Q1_m2"].H) < 1e-9 * sup(K2.R) ** 2
        assert sup(t["Q2_m2"].H) < 1e-9 * sup(K2.R) ** 2


def test_degree_one_closed_form_in_dimension_two():
    for s in range(10):
        K = curvature_from_jets(random_jets(2, 2, seed=s))
        q = kahler_tensor_identities(K)["Q_m1"].H
        expected = -0.5 * scalar_curvature(K) * np.eye(2) + ricci(K).H
        assert sup(q - expected) < 1e-12 * max(1, sup(K.R))


@pytest.mark.parametrize("seed", range(10))
def test_closed_forms_in_dimension_three(seed):
    K = curvature_from_jets(random_jets(3, 2, seed=seed))
    for r in closed_form_report(K):
        deg = 1 if r.name == "Q_m1" else 2
        assert r.deviation < 1e-9 * sup(K.R) ** deg, r.name


def test_real_frame_ricci_agrees_with_kahler_contractions():
    K = curvature_from_jets(random_jets(3, 2, seed=4))
    c = closed_forms(K)
    assert c["tau"] == pytest.approx(scalar_curvature(K), rel=1e-12)
    assert sup(c["rho"].H - ricci(K).H) < 1e-12 * sup(K.R)
    assert sup(c["g"].H - np.eye(3)) < 1e-15


def test_real_curvature_has_kahler_symmetry():
    K = curvature_from_jets(random_jets(2, 2, seed=9))
    R = kahler_to_real(K).R
    J = np.zeros((4, 4))
    for a in range(2):
        # the real frame is (x_1, x_2, y_1, y_2) with J x = y
        J[a + 2, a], J[a, a + 2] = 1, -1
    RJ = np.einsum("ijkl,kc,ld->ijcd", R, J, J)
    assert sup(RJ - R) < 1e-12 * sup(R)


def test_printed_trace_coefficient_of_the_difference():
    # the alternative coefficient differs from Q2 - Q1 by a multiple of g
    for s in range(5):
        K = curvature_from_jets(random_jets(3, 2, seed=s))
        t = kahler_tensor_identities(K)
        diff = t["Q2_m2"].H - t["Q1_m2"].H
        printed = euler_combination_as_printed(K).H
        gap = diff - printed
        assert sup(gap - gap[0, 0] * np.eye(3)) < 1e-10 * sup(K.R) ** 2
        assert abs(gap[0, 0]) > 1e-3 * sup(K.R) ** 2
        assert sup(diff - closed_form_tensors(K)["Q2_minus_Q1"].H) < 1e-10 * sup(K.R) ** 2


@given(st.integers(1, 3), seeds)
def test_kahler_invariants_are_unitarily_covariant(m, seed):
    K = curvature_from_jets(random_jets(m, 2, seed=seed))
    U = random_unitary(m, seed + 1)
    Ku = curvature_in_frame(K, U)
    s = max(1.0, sup(K.R))
    a, b = kahler_scalar_identities(K), kahler_scalar_identities(Ku)
    for key in a:
        assert abs(a[key] - b[key]) < 1e-9 * s**2
    ta, tb = kahler_tensor_identities(K), kahler_tensor_identities(Ku)
    for key in ta:
        assert sup(tb[key].H - U.conj().T @ ta[key].H @ U) < 1e-9 * s**2
    assert sup(ricci(Ku).H - U.conj().T @ ricci(K).H @ U) < 1e-9 * s
    ca, cb = closed_forms(K), closed_forms(Ku)
    for key in ("tau", "R_norm2", "rho_norm2"):
        assert abs(ca[key] - cb[key]) < 1e-9 * s**2
    for key in ("Rcheck", "rhocheck", "L_rho"):
        assert sup(cb[key].H - U.conj().T @ ca[key].H @ U) < 1e-9 * s**2


# -- the verification table


def test_identity_table_passes():
    rows = identity_table()
    assert rows and all(r["passed"] for r in rows)
    names = {r["check"] for r in rows}
    assert {"E6 vanishes", "T4 generically nonzero", "Q2_minus_Q1 closed form"} <= names


def test_identity_table_subsets_and_tolerance():
    assert [r["check"] for r in identity_table(dim=1)] == ["Q_m1 vanishes"]
    assert not all(r["passed"] for r in identity_table(tol=0.0))
    with pytest.raises(ValueError):
        identity_table(dim=0)
