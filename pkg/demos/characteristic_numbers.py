"""Characteristic numbers do not depend on the metric.

Integrate top-degree classes over projective spaces and tori, both for the
standard metric and for randomly perturbed ones.
"""

from kahlerlab import geometry

for space, cls in (("cp1", "c1"), ("cp1xcp1", "c1c1"), ("cp1xcp1", "c2"), ("cp2", "c1c1"), ("cp2", "c2"), ("torus2", "tr1tr1")):
    model = geometry.space_model(space)
    value = geometry.characteristic_number(model, geometry.class_polynomial(cls, model.m), normalized=True)
    print(f"{space:8} {cls:6} = {value:+.12f}")

base = geometry.fubini_study_model(1)
for seed in range(3):
    model = geometry.KahlerModel(base.factors, geometry.random_perturbation(base, seed, amplitude=0.1))
    grid = geometry.make_grid(model, radial_n=80, angular_n=16)
    value = geometry.characteristic_number(model, geometry.class_polynomial("c1", 1), True, grid)
    print(f"perturbed cp1 (seed {seed}): c1 = {value:.12f}")
