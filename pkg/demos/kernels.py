"""Every universal identity of degree k comes from a trace monomial.

Contraction patterns of k curvature factors span the local invariants. The
ones that vanish on all Kähler manifolds of dimension k - 1 form a space
whose dimension is the partition number rho(k), and the transgressed trace
monomials fill it out.
"""

from kahlerlab.kernel import verify_xi_spans

for valued, cases in (("scalar", [(1, 1), (2, 2), (2, 4), (3, 3), (3, 5)]), ("tensor", [(1, 2), (2, 3), (2, 4)])):
    for k, m in cases:
        rep = verify_xi_spans(k, m, valued)
        worst = max(rep.residuals.values())
        print(f"{valued:6} k={k} m={m}: patterns={rep.pattern_count} kernel={rep.kernel_dim} rho={rep.rho} residual={worst:.1e}")

rep = verify_xi_spans(2, 3, "scalar", include_order3=True)
print(f"with the order-3 jet pattern: kernel={rep.kernel_dim}, its coefficient={rep.order3_coefficient:.1e}")
