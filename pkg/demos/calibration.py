"""Top-degree calibration: pairing a characteristic form with Omega^m recovers the form.

For a random Kähler 2-jet in complex dimension m, evaluate every trace
monomial of degree m on the curvature matrix of (1,1)-forms, pair it with
Omega^m / m! and multiply by the volume form. The result is the original
top-degree form, coefficient for coefficient.
"""

import math

import numpy as np

from kahlerlab.forms import PQForm, curvature_form_matrix, form_inner_product, omega_power
from kahlerlab.invariants import InvariantPolynomial, evaluate_poly, partitions
from kahlerlab.jets import curvature_from_jets, random_jets

for m in (1, 2, 3):
    omega = omega_power(PQForm.from_hermitian(np.eye(m)), m)
    vol = omega.top_coefficient() / math.factorial(m)
    F = curvature_form_matrix(curvature_from_jets(random_jets(m, 2, seed=m)))
    for parts in partitions(m):
        top = evaluate_poly(InvariantPolynomial.monomial(m, parts), F)
        xi = form_inner_product(top, omega) / math.factorial(m)
        print(f"m={m} Tr{parts}: Xi_P = {xi.real:+.6f}  |Xi_P dnu - S(R)| = {abs(xi * vol - top.top_coefficient()):.1e}")
