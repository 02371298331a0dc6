"""Numerical laboratory for universal curvature identities on Kähler manifolds.

Modules:

* :mod:`tensors`: labeled complex tensors and index contraction
* :mod:`jets`: jets of a Kähler metric, normalized coordinates, curvature
* :mod:`forms`: (p,q)-forms, wedge products and the metric pairing
* :mod:`invariants`: the ring of trace polynomials and its restriction maps
* :mod:`transgression`: the scalar pairing, the transgression and the action
* :mod:`catalog`: explicit curvature invariants as index sums
* :mod:`kernel`: contraction patterns and the dimension of identity spaces
* :mod:`geometry`: compact models, quadrature and characteristic numbers
"""

from .invariants import InvariantPolynomial, partitions, rho
from .jets import JetTable, KahlerCurvature, curvature_from_jets, normalize_coordinates, random_jets
from .transgression import HermitianTwoTensor, xi_P, xi_Q

__version__ = "0.1.0"

__all__ = [
    "HermitianTwoTensor",
    "InvariantPolynomial",
    "JetTable",
    "KahlerCurvature",
    "curvature_from_jets",
    "normalize_coordinates",
    "partitions",
    "random_jets",
    "rho",
    "xi_P",
    "xi_Q",
]
