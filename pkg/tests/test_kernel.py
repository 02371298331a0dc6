import itertools

import numpy as np
import pytest

from kahlerlab.catalog import kahler_scalar_identities, kahler_tensor_identities, scalar_curvature
from kahlerlab.invariants import rho
from kahlerlab.jets import curvature_from_jets, prescribe_jets, product_with_torus, random_jets
from kahlerlab.kernel import (
    ContractionPattern,
    PatternError,
    RankInstabilityError,
    enumerate_patterns,
    evaluate_pattern,
    evaluation_matrix,
    kernel_dimension,
    numerical_rank,
    orbit_count,
    order3_array,
    span_dimension,
    stable_rank,
    verify_xi_spans,
)


def batch(m, n, seed=0):
    return np.array([curvature_from_jets(random_jets(m, 2, seed=seed + s)).R for s in range(n)])


def test_pattern_inventory():
    assert len(enumerate_patterns(1)) == 1
    assert len(enumerate_patterns(2, include_order3=True)) == len(enumerate_patterns(2)) + 1
    tensor = enumerate_patterns(1, "tensor")
    assert len(tensor) == 2
    # one pattern pairs the free slots with each other (a multiple of g), one does not
    kinds = sorted(p.slot_map[-1] == 2 for p in tensor)
    assert kinds == [False, True]


@pytest.mark.parametrize("k,valued", [(1, "scalar"), (2, "scalar"), (3, "scalar"), (1, "tensor"), (2, "tensor")])
def test_canonical_forms_match_orbit_enumeration(k, valued):
    assert len(enumerate_patterns(k, valued)) == orbit_count(k, valued)


def test_patterns_pair_holomorphic_with_antiholomorphic_slots():
    for k in (1, 2, 3):
        for p in enumerate_patterns(k):
            hol, anti = p.degree_profile()
            assert hol == anti == 2 * k


def test_pattern_errors():
    with pytest.raises(PatternError):
        enumerate_patterns(4)
    with pytest.raises(PatternError):
        enumerate_patterns(3, "tensor")
    with pytest.raises(PatternError):
        enumerate_patterns(1, include_order3=True)
    with pytest.raises(PatternError):
        ContractionPattern(1, (0, 0))
    p = enumerate_patterns(2, include_order3=True)[-1]
    with pytest.raises(PatternError):
        evaluate_pattern(p, batch(2, 1))
    with pytest.raises(PatternError):
        order3_array(random_jets(2, 2, seed=0))


def test_pattern_values():
    flat = curvature_from_jets(prescribe_jets(2, 2)).R[None]
    assert all(np.all(evaluate_pattern(p, flat) == 0) for p in enumerate_patterns(2))
    R = batch(3, 5)
    tau = np.array([scalar_curvature(curvature_from_jets(random_jets(3, 2, seed=s))) for s in range(5)])
    # the single degree-one pattern is the full contraction, -tau/2
    assert np.max(np.abs(evaluate_pattern(enumerate_patterns(1)[0], R) + tau / 2)) < 1e-12


def test_patterns_reproduce_quadratic_identity():
    patterns = enumerate_patterns(2)
    R = batch(2, 12, seed=3)
    M = evaluation_matrix(patterns, R)
    target = np.array([kahler_scalar_identities(curvature_from_jets(random_jets(2, 2, seed=3 + s)))["P1"] for s in range(12)])
    c, *_ = np.linalg.lstsq(M.T, target.astype(complex), rcond=None)
    assert np.linalg.norm(M.T @ c - target) < 1e-10 * np.linalg.norm(target)


def test_tensor_patterns_reproduce_degree_one_identity():
    patterns = enumerate_patterns(1, "tensor")
    R = batch(3, 8, seed=1)
    M = evaluation_matrix(patterns, R)
    target = np.array([kahler_tensor_identities(curvature_from_jets(random_jets(3, 2, seed=1 + s)))["Q_m1"].H for s in range(8)]).reshape(-1)
    c, *_ = np.linalg.lstsq(M.T, target, rcond=None)
    assert np.linalg.norm(M.T @ c - target) < 1e-10 * np.linalg.norm(target)


def test_span_dimensions():
    assert span_dimension([], 2) == 0
    assert span_dimension(enumerate_patterns(1), 3) == 1
    assert span_dimension(enumerate_patterns(2), 1) < span_dimension(enumerate_patterns(2), 2)
    with pytest.raises(PatternError):
        span_dimension(enumerate_patterns(2), 2, samples=3)
    assert span_dimension(enumerate_patterns(2), 3, seed=5) == span_dimension(enumerate_patterns(2), 3, seed=5)


def test_rank_helpers():
    assert numerical_rank(np.zeros((2, 3))) == 0
    assert stable_rank(np.diag([1.0, 1e-3, 0.0])) == 2
    with pytest.raises(RankInstabilityError):
        stable_rank(np.diag([1.0, 1e-8]))


@pytest.mark.parametrize("k,m", [(1, 2), (2, 2), (2, 3), (2, 4), (3, 3), (3, 4)])
def test_scalar_kernel_dimension(k, m):
    assert kernel_dimension(enumerate_patterns(k), k, m) == rho(k)


@pytest.mark.parametrize("k,m", [(1, 2), (1, 3), (2, 3)])
def test_tensor_kernel_dimension(k, m):
    assert kernel_dimension(enumerate_patterns(k, "tensor"), k, m, "tensor") == rho(k)


def test_kernel_needs_enough_dimensions():
    with pytest.raises(PatternError):
        kernel_dimension(enumerate_patterns(2, "tensor"), 2, 2, "tensor")


@pytest.mark.parametrize("k,m,valued", [(1, 2, "tensor"), (2, 3, "scalar"), (2, 3, "tensor")])
def test_transgressions_span_the_kernel(k, m, valued):
    rep = verify_xi_spans(k, m, valued)
    assert rep.passed
    assert max(rep.residuals.values()) < 1e-10
    assert rep.to_dict()["passed"]


def test_higher_jets_play_no_role():
    rep = verify_xi_spans(2, 3, "scalar", include_order3=True)
    assert rep.kernel_dim == 2
    assert rep.order3_coefficient < 1e-8


def test_padding_does_not_change_patterns():
    for s in range(5):
        j = random_jets(2, 2, seed=s)
        R = curvature_from_jets(j).R[None]
        Rp = curvature_from_jets(product_with_torus(j, 1)).R[None]
        for p in enumerate_patterns(2):
            assert np.max(np.abs(evaluate_pattern(p, R) - evaluate_pattern(p, Rp))) <= 1e-12 * max(1, np.abs(R).max() ** 2)
