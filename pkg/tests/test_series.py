import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlerlab.series import Series, exponents

points = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def test_exponents():
    assert exponents(2, 1) == ((0, 0), (1, 0), (0, 1))
    assert len(exponents(3, 2)) == 10


def line(z, D=2):
    pts = np.array([[z]])
    return Series.variable(1, D, 0, pts), Series.variable(1, D, 0, pts, conjugate=True)


@given(points)
def test_log_of_fubini_study_norm(z):
    s, sb = line(z)
    f = (s * sb + 1.0).log()
    r2 = abs(z) ** 2
    assert f.derivative([0], [0])[0] == pytest.approx(1 / (1 + r2) ** 2, rel=1e-12)
    assert f.derivative([0, 0], [0])[0] == pytest.approx(-2 * np.conj(z) / (1 + r2) ** 3, rel=1e-12, abs=1e-14)
    assert f.derivative([0, 0], [0, 0])[0] == pytest.approx((4 * r2 - 2) / (1 + r2) ** 4, rel=1e-10, abs=1e-13)


@given(points, st.integers(1, 3))
def test_power_of_norm(z, c):
    s, sb = line(z)
    f = (s * sb + 1.0).power(-c)
    u = 1 + abs(z) ** 2
    # d dbar u^-c = -c u^(-c-1) + c (c+1) |z|^2 u^(-c-2)
    expected = -c * u ** (-c - 1) + c * (c + 1) * abs(z) ** 2 * u ** (-c - 2)
    assert f.derivative([0], [0])[0] == pytest.approx(expected, rel=1e-10, abs=1e-13)


@given(points, st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_exponential(z, a):
    s, sb = line(z)
    b = 0.5 - 0.25j
    f = (s * a + sb * b).exp()
    base = np.exp(a * z + b * np.conj(z))
    for p in range(3):
        for q in range(3):
            assert f.derivative([0] * p, [0] * q)[0] == pytest.approx(a**p * b**q * base, rel=1e-12, abs=1e-12)


def test_polynomials_are_exact():
    pts = np.array([[0.3 + 0.2j, -0.7j]])
    z = [Series.variable(2, 2, v, pts) for v in range(2)]
    zb = [Series.variable(2, 2, v, pts, conjugate=True) for v in range(2)]
    f = z[0] * z[0] * zb[1] * zb[1] * 0.5
    assert f.derivative([0, 0], [1, 1])[0] == 2.0
    assert f.derivative([0, 0], [1])[0] == pytest.approx(2 * np.conj(pts[0, 1]))
    assert f.derivative([1], [1])[0] == 0
    # z0^3 has a third derivative that falls outside the box and is dropped
    cube = z[0] * z[0] * z[0]
    assert cube.derivative([0, 0], [])[0] == pytest.approx(6 * pts[0, 0])


def test_conjugation_and_real_part():
    s, sb = line(0.4 + 0.1j)
    f = s * s * sb * (1 + 2j)
    g = f.conj()
    assert g.derivative([0], [0, 0])[0] == pytest.approx(np.conj(f.derivative([0, 0], [0])[0]))
    r = f.real_part()
    assert r.value()[0] == pytest.approx(f.value()[0].real)
