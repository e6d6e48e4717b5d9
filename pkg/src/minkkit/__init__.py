"""Numerical toolkit for finite-dimensional real normed spaces.

Semi-inner products and norm derivatives, operator predicates, real block
normal forms, Birkhoff orthogonality, left reflections, John and Löwner
ellipsoids, and isometry groups of polytopal unit balls.
"""

from .errors import (
    DefectiveOperatorError,
    InputError,
    MinkkitError,
    NumericError,
    ResourceError,
    UnsupportedOperationError,
)
from .normspace import NormModel, classify, dual_norm, named_polytope, norm, unit_sphere_samples
from .sip import SipContext, duality_map, rho_minus, rho_plus, riesz_representer, sip
from .operators import (
    PredicateReport,
    gen_adjoint_apply,
    generalized_rotation,
    is_adjoint_abelian,
    is_isometry,
    is_self_adjoint,
    iso_abelian_check,
)
from .spectral import adjoint_abelian_normal_form, isometry_normal_form, real_block_decomposition
from .ortho import birkhoff, birkhoff_direction, james
from .reflect import AffineMap, LineSpec, classify_composition, compose, left_reflection, left_reflection_hyperplane
from .ellipsoid import Ellipsoid, contact_points, john, lowner
from .symmetry import PointGroup, group_report, orbit_probe, polytopal_isometry_group

__version__ = "0.1.0"

__all__ = [
    "DefectiveOperatorError",
    "InputError",
    "MinkkitError",
    "NumericError",
    "ResourceError",
    "UnsupportedOperationError",
    "NormModel",
    "classify",
    "dual_norm",
    "named_polytope",
    "norm",
    "unit_sphere_samples",
    "SipContext",
    "duality_map",
    "rho_minus",
    "rho_plus",
    "riesz_representer",
    "sip",
    "PredicateReport",
    "gen_adjoint_apply",
    "generalized_rotation",
    "is_adjoint_abelian",
    "is_isometry",
    "is_self_adjoint",
    "iso_abelian_check",
    "adjoint_abelian_normal_form",
    "isometry_normal_form",
    "real_block_decomposition",
    "birkhoff",
    "birkhoff_direction",
    "james",
    "AffineMap",
    "LineSpec",
    "classify_composition",
    "compose",
    "left_reflection",
    "left_reflection_hyperplane",
    "Ellipsoid",
    "contact_points",
    "john",
    "lowner",
    "PointGroup",
    "group_report",
    "orbit_probe",
    "polytopal_isometry_group",
]
