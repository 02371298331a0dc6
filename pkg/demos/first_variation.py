"""The Euler-Lagrange tensor of a characteristic action is its transgression.

Perturb a compact Kähler metric by the Hessian of a smooth potential and
differentiate the action numerically. The derivative matches the integral of
the transgressed tensor against the variation. On a flat torus both sides
are zero, so a product with a projective factor is used instead.
"""

from kahlerlab import geometry
from kahlerlab.invariants import InvariantPolynomial
from kahlerlab.transgression import euler_lagrange_check

for m, parts in ((2, (1,)), (3, (2,)), (3, (1, 1))):
    model, variation, grid = geometry.variation_experiment(m, seed=0)
    rep = euler_lagrange_check(InvariantPolynomial.monomial(m, parts), sum(parts), model, variation, grid)
    print(f"m={m} Tr{parts}: d/deps action = {rep.lhs:+.10f}  pairing = {rep.rhs:+.10f}  rel_err = {rep.rel_err:.1e}")

model, variation, grid = geometry.variation_experiment(2, seed=0, kind="torus")
rep = euler_lagrange_check(InvariantPolynomial.monomial(2, (1,)), 1, model, variation, grid)
print(f"flat torus: lhs = {rep.lhs:.1e}, rhs = {rep.rhs:.1e} (degenerate: {rep.degenerate})")
