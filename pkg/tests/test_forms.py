import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerlab.catalog import kahler_scalar_identities, scalar_curvature
from kahlerlab.forms import (
    BidegreeError,
    PQForm,
    curvature_form_matrix,
    form_inner_product,
    kahler_form,
    omega_power,
    volume_form,
    wedge,
)
from kahlerlab.invariants import InvariantPolynomial, evaluate_poly, partitions
from kahlerlab.jets import curvature_from_jets, jets_from_potential, fubini_study_potential, prescribe_jets, random_jets

seeds = st.integers(0, 2**32 - 1)


def random_11(m, rng):
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return PQForm.from_hermitian(X)


def random_hermitian_metric(m, rng):
    A = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return A @ A.conj().T + m * np.eye(m)


def metric_jets(G):
    m = G.shape[0]
    values = {((a + 1,), (b + 1,)): G[a, b] for a in range(m) for b in range(a + 1, m)}
    values.update({((a + 1,), (a + 1,)): G[a, a].real for a in range(m)})
    return prescribe_jets(m, 2, values)


def test_wedge_basics():
    assert wedge(PQForm.dz(2, 1), PQForm.dz(2, 1)).is_zero()
    a = wedge(PQForm.dz(2, 1), PQForm.dzbar(2, 1))
    b = wedge(PQForm.dz(2, 2), PQForm.dzbar(2, 2))
    assert wedge(a, b).max_abs_diff(wedge(b, a)) == 0
    # one-forms anticommute
    x, y = PQForm.dz(2, 1), PQForm.dzbar(2, 2)
    assert wedge(x, y).max_abs_diff(-1 * wedge(y, x)) == 0
    with pytest.raises(BidegreeError):
        wedge(PQForm.dz(2, 1), PQForm.dz(3, 1))


@given(st.integers(1, 3), seeds)
def test_wedge_is_associative_and_graded_commutative(m, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_11(m, rng) for _ in range(3))
    left, right = wedge(wedge(a, b), c), wedge(a, wedge(b, c))
    assert left.max_abs_diff(right) < 1e-12
    x = PQForm(m, 1, 0, {((i + 1,), ()): complex(*rng.standard_normal(2)) for i in range(m)})
    y = PQForm(m, 0, 1, {((), (i + 1,)): complex(*rng.standard_normal(2)) for i in range(m)})
    assert wedge(x, y).max_abs_diff(-1 * wedge(y, x)) < 1e-12
    assert wedge(x, a).max_abs_diff(wedge(a, x)) < 1e-12


def test_overflow_is_zero():
    omega = PQForm.from_hermitian(np.eye(2))
    assert omega_power(omega, 3).is_zero()
    assert form_inner_product(omega_power(omega, 3), omega_power(omega, 3)) == 0


def test_omega_is_real():
    G = random_hermitian_metric(3, np.random.default_rng(0))
    omega = kahler_form(metric_jets(G))
    assert omega.conjugate().max_abs_diff(omega) < 1e-14


def test_volume_forms():
    v1 = volume_form(prescribe_jets(1, 2))
    assert v1.coeffs == {((1,), (1,)): -1j}
    flat2 = prescribe_jets(2, 2)
    omega = kahler_form(flat2)
    assert volume_form(flat2).max_abs_diff(omega_power(omega, 2) * 0.5) == 0
    # (-i)^2 times the reordering sign of dz1 dzbar1 dz2 dzbar2
    assert volume_form(flat2).top_coefficient() == pytest.approx(1.0)


@given(st.integers(1, 3), seeds)
def test_volume_form_scales_by_determinant(m, seed):
    G = random_hermitian_metric(m, np.random.default_rng(seed))
    flat = volume_form(prescribe_jets(m, 2)).top_coefficient()
    top = volume_form(metric_jets(G)).top_coefficient()
    assert abs(top - np.linalg.det(G) * flat) < 1e-10 * abs(np.linalg.det(G))


def test_inner_product_examples():
    a = wedge(PQForm.dz(1, 1), PQForm.dzbar(1, 1))
    assert form_inner_product(a, a) == -1
    b = wedge(PQForm.dz(2, 2), PQForm.dzbar(2, 2))
    c = wedge(PQForm.dz(2, 1), PQForm.dzbar(2, 1))
    assert form_inner_product(b, c) == 0
    with pytest.raises(BidegreeError):
        form_inner_product(PQForm.dz(2, 1), c)


def test_inner_product_with_metric_matches_unitary_frame():
    # for G = T^-* T^-1 the coframe dz T^-1 is unitary, so both sides agree
    rng = np.random.default_rng(3)
    G = random_hermitian_metric(2, rng)
    omega = kahler_form(metric_jets(G))
    assert form_inner_product(omega, omega, metric_jets(G)) == pytest.approx(form_inner_product(PQForm.from_hermitian(np.eye(2)), PQForm.from_hermitian(np.eye(2))))


def test_curvature_form_matrix_flat_and_fubini_study():
    F = curvature_form_matrix(curvature_from_jets(prescribe_jets(2, 2)))
    assert all(e.is_zero() for row in F.entries for e in row)
    K = curvature_from_jets(jets_from_potential(fubini_study_potential(1)))
    entry = curvature_form_matrix(K).entries[0][0]
    assert entry.coeffs[((1,), (1,))] == pytest.approx(2j)


@given(st.integers(1, 3), seeds)
def test_trace_of_curvature_matrix_pairs_to_scalar_curvature(m, seed):
    K = curvature_from_jets(random_jets(m, 2, seed=seed))
    tr = curvature_form_matrix(K).trace()
    omega = PQForm.from_hermitian(np.eye(m))
    assert abs(form_inner_product(tr, omega) + scalar_curvature(K) / 2) < 1e-10 * max(1, abs(scalar_curvature(K)))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_top_degree_calibration(m):
    omega = omega_power(PQForm.from_hermitian(np.eye(m)), m)
    vol = omega * (1 / math.factorial(m))
    for seed in range(10):
        K = curvature_from_jets(random_jets(m, 2, seed=seed))
        F = curvature_form_matrix(K)
        for parts in partitions(m):
            top = evaluate_poly(InvariantPolynomial.monomial(m, parts), F)
            xi = form_inner_product(top, omega) / math.factorial(m)
            assert abs(xi * vol.top_coefficient() - top.top_coefficient()) < 1e-12 * max(1.0, abs(xi))


def test_quadratic_scalar_identities_as_forms():
    omega2 = omega_power(PQForm.from_hermitian(np.eye(2)), 2)
    for seed in range(5):
        K = curvature_from_jets(random_jets(2, 2, seed=seed))
        F = curvature_form_matrix(K)
        s = kahler_scalar_identities(K)
        p1 = form_inner_product(evaluate_poly(InvariantPolynomial.monomial(2, (2,)), F), omega2) / 2
        p2 = form_inner_product(evaluate_poly(InvariantPolynomial.monomial(2, (1, 1)), F), omega2) / 2
        assert abs(p1 - s["P1"]) < 1e-10 * max(1, abs(s["P1"]))
        assert abs(p2 - s["P2"]) < 1e-10 * max(1, abs(s["P2"]))


def test_product_split_of_top_power():
    # (1/(k+1)!) Omega^{k+1} = (1/k!) Omega_N^k ^ Omega_T on N x T with T one-dimensional
    rng = np.random.default_rng(7)
    for k in (1, 2):
        G = random_hermitian_metric(k, rng)
        full = np.zeros((k + 1, k + 1), dtype=complex)
        full[:k, :k] = G
        full[k, k] = 1.0
        lhs = omega_power(PQForm.from_hermitian(full), k + 1) * (1 / math.factorial(k + 1))
        GN = np.zeros_like(full)
        GN[:k, :k] = G
        GT = np.zeros_like(full)
        GT[k, k] = 1.0
        rhs = wedge(omega_power(PQForm.from_hermitian(GN), k), PQForm.from_hermitian(GT)) * (1 / math.factorial(k))
        assert lhs.max_abs_diff(rhs) < 1e-12
