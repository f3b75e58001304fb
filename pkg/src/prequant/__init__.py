"""Explicit prequantum circle bundles and numerical checks of torus-action lifts."""

from .errors import (
    DomainError,
    InputError,
    IntegrationError,
    PreconditionError,
    PrequantError,
    QuadratureError,
    ScenarioError,
)
from .flows import (
    FlowConfig,
    closure_defect,
    disk_integral,
    holonomy,
    integrate_flow,
    orbit_loop,
    swept_disk_integral,
)
from .geom import Point, Tangent, VectorField, contact_volume_check, lie_bracket, lie_derivative_oneform
from .lift import LatticeVector, contact_vector_field, horizontal_lift, lift_field, normalize_moment_map
from .models import make_cpn_bundle, make_model, make_s2_bundle
from .verify import CheckReport, check_equivariance, check_lemma2, dimension_bound_check, run_check, so3_obstruction_demo

__all__ = [
    "CheckReport",
    "DomainError",
    "FlowConfig",
    "InputError",
    "IntegrationError",
    "LatticeVector",
    "Point",
    "PreconditionError",
    "PrequantError",
    "QuadratureError",
    "ScenarioError",
    "Tangent",
    "VectorField",
    "check_equivariance",
    "check_lemma2",
    "closure_defect",
    "contact_vector_field",
    "contact_volume_check",
    "dimension_bound_check",
    "disk_integral",
    "holonomy",
    "horizontal_lift",
    "integrate_flow",
    "lie_bracket",
    "lie_derivative_oneform",
    "lift_field",
    "make_cpn_bundle",
    "make_model",
    "make_s2_bundle",
    "normalize_moment_map",
    "orbit_loop",
    "run_check",
    "so3_obstruction_demo",
    "swept_disk_integral",
]
