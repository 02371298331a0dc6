import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerlab.catalog import ricci
from kahlerlab.forms import FormMatrix, PQForm, curvature_form_matrix, wedge
from kahlerlab.invariants import (
    InvariantError,
    InvariantPolynomial,
    dim_S,
    evaluate_on_matrix,
    evaluate_poly,
    partitions,
    poly_from_json,
    poly_from_name,
    poly_to_json,
    restrict_poly,
    rho,
)
from kahlerlab.jets import curvature_from_jets, fubini_study_potential, jets_from_potential, prescribe_jets

seeds = st.integers(0, 2**32 - 1)


def brute_partitions(k):
    out = set()
    for n in range(1, k + 1):
        for combo in itertools.product(range(1, k + 1), repeat=n):
            if sum(combo) == k:
                out.add(tuple(sorted(combo, reverse=True)))
    return out


def random_matrix(n, rng):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def embed(B, m):
    out = np.zeros((m, m), dtype=complex)
    n = B.shape[0]
    out[:n, :n] = B
    return out


def random_poly(m, k, rng):
    return InvariantPolynomial(m, k, {p: complex(*rng.standard_normal(2)) for p in partitions(k) if max(p) <= m})


def test_partition_examples():
    assert partitions(1) == ((1,),) and rho(1) == 1
    assert partitions(2) == ((2,), (1, 1)) and rho(2) == 2
    assert rho(4) == 5


@pytest.mark.parametrize("k", range(1, 8))
def test_partitions_match_brute_force(k):
    assert set(partitions(k)) == brute_partitions(k)
    assert len(partitions(k)) == len(set(partitions(k)))
    assert all(list(p) == sorted(p, reverse=True) for p in partitions(k))


def test_dim_s():
    assert dim_S(2, 2) == 2
    assert all(dim_S(1, k) == 1 for k in range(1, 8))
    assert dim_S(2, 3) == 2
    assert all(dim_S(m, k) == rho(k) for k in range(1, 6) for m in range(k, 7))


def test_polynomial_validation():
    with pytest.raises(InvariantError):
        InvariantPolynomial(2, 3, {(3,): 1.0})
    with pytest.raises(InvariantError):
        InvariantPolynomial(3, 3, {(2,): 1.0})
    with pytest.raises(InvariantError):
        InvariantPolynomial(3, 2, {(2, 0): 1.0})
    P = InvariantPolynomial(3, 2, {(1, 1): 1.0, (2,): 0.0})
    assert P.coeffs == {(1, 1): 1.0}


def test_restriction_examples(rng):
    tr2 = InvariantPolynomial.monomial(3, (2,))
    assert restrict_poly(tr2, 2).coeffs == {(2,): 1.0}
    zero = InvariantPolynomial(3, 3, {})
    assert restrict_poly(zero, 2).coeffs == {}
    r = restrict_poly(InvariantPolynomial.monomial(3, (3,)), 2)
    assert r.coeffs[(2, 1)] == pytest.approx(1.5)
    assert r.coeffs[(1, 1, 1)] == pytest.approx(-0.5)
    for _ in range(20):
        B = random_matrix(2, rng)
        lhs = evaluate_on_matrix(InvariantPolynomial.monomial(3, (3,)), embed(B, 3))
        assert abs(lhs - evaluate_on_matrix(r, B)) < 1e-10 * max(1, abs(lhs))


@pytest.mark.parametrize("m,n,k", [(3, 1, 3), (3, 2, 3), (4, 2, 4), (4, 3, 4), (5, 2, 5), (4, 1, 2)])
def test_restriction_matches_substitution(m, n, k, rng):
    P = random_poly(m, k, rng)
    r = restrict_poly(P, n)
    for _ in range(20):
        B = random_matrix(n, rng)
        lhs = evaluate_on_matrix(P, embed(B, m))
        assert abs(lhs - evaluate_on_matrix(r, B)) < 1e-10 * max(1, abs(lhs))


def test_generators_restrict_to_themselves(rng):
    for m in range(2, 5):
        for n in range(1, m):
            for i in range(1, n + 1):
                assert restrict_poly(InvariantPolynomial.monomial(m, (i,)), n).coeffs == {(i,): 1.0}
                B = random_matrix(n, rng)
                assert abs(evaluate_on_matrix(InvariantPolynomial.monomial(m, (i,)), embed(B, m)) - np.trace(np.linalg.matrix_power(B, i))) < 1e-10 * max(1, np.abs(B).max() ** i)


@given(seeds)
def test_restriction_composes(seed):
    rng = np.random.default_rng(seed)
    P = random_poly(4, 4, rng)
    two_step = restrict_poly(restrict_poly(P, 3), 2)
    direct = restrict_poly(P, 2)
    for _ in range(3):
        B = random_matrix(2, rng)
        a, b = evaluate_on_matrix(two_step, B), evaluate_on_matrix(direct, B)
        assert abs(a - b) < 1e-10 * max(1, abs(a))


@pytest.mark.parametrize("m,n,k", [(3, 2, 2), (4, 3, 3), (4, 2, 2)])
def test_restriction_is_injective_when_n_at_least_k(m, n, k, rng):
    basis = [InvariantPolynomial.monomial(m, p) for p in partitions(k)]
    rows = []
    for _ in range(3 * len(basis)):
        B = random_matrix(n, rng)
        rows.append([evaluate_on_matrix(restrict_poly(P, n), B) for P in basis])
    assert np.linalg.matrix_rank(np.array(rows)) == len(basis)


def test_restriction_is_surjective(rng):
    # every monomial in the target basis is the image of the same monomial upstairs
    for parts in partitions(3):
        if max(parts) <= 2:
            assert restrict_poly(InvariantPolynomial.monomial(4, parts), 2).coeffs == {parts: 1.0}


def random_form_matrix(m, rng):
    return FormMatrix(m, [[PQForm.from_hermitian(random_matrix(m, rng)) for _ in range(m)] for _ in range(m)])


def test_evaluate_zero_matrix():
    zero = FormMatrix(2, [[PQForm.zero(2, 1, 1)] * 2] * 2)
    for parts in ((1,), (2,), (1, 1)):
        assert evaluate_poly(InvariantPolynomial.monomial(2, parts), zero).is_zero()
    assert evaluate_poly(InvariantPolynomial.monomial(2, (2, 1)), zero).is_zero()


def test_first_trace_is_ricci_form():
    for j in (jets_from_potential(fubini_study_potential(1)), prescribe_jets(2, 2, {((1, 2), (1, 2)): 0.3, ((1, 1), (2, 2)): 0.2 + 0.1j})):
        K = curvature_from_jets(j)
        tr = evaluate_poly(InvariantPolynomial.monomial(K.m, (1,)), curvature_form_matrix(K))
        # Tr of the curvature matrix is -i * (-rho) in the Hermitian-to-form rule
        expected = PQForm.from_hermitian(-ricci(K).H.T)
        assert tr.max_abs_diff(expected) < 1e-12


@given(seeds)
def test_evaluation_is_multiplicative(seed):
    rng = np.random.default_rng(seed)
    F = random_form_matrix(3, rng)
    P, Q = random_poly(3, 1, rng), random_poly(3, 2, rng)
    prod = evaluate_poly(P * Q, F)
    split = wedge(evaluate_poly(P, F), evaluate_poly(Q, F))
    assert prod.max_abs_diff(split) < 1e-12 * max(1.0, max(abs(v) for v in prod.coeffs.values()))


def test_json_and_names():
    P = InvariantPolynomial(3, 2, {(2,): 1.0, (1, 1): -0.5 + 0.25j})
    assert poly_from_json(poly_to_json(P), 3) == P
    assert poly_from_name("tr1tr1", 2) == InvariantPolynomial.monomial(2, (1, 1))
    assert poly_from_name("Tr1^2", 2) == InvariantPolynomial.monomial(2, (1, 1))
    assert poly_from_name("tr2", 3).coeffs == {(2,): 1.0}
    with pytest.raises(InvariantError):
        poly_from_name("c1", 2)
    with pytest.raises(InvariantError):
        poly_from_json({"k": 2}, 2)
