"""Universal curvature identities: which invariants vanish in low dimension.

Each identity is evaluated on 50 random curvature tensors in the dimension
where it must vanish and one dimension up, where it must not. The closed
forms of the degree-2 tensor identities are compared at m = 3.
"""

from kahlerlab.catalog import identity_table

for row in identity_table(samples=50):
    status = "ok  " if row["passed"] else "FAIL"
    print(f'{status} {row["check"]:<32} dim={row["dim"]}  value={row["value"]:.2e}')
