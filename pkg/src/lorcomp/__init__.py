"""Numerical timelike-curvature comparison on finite Lorentzian pre-length spaces."""

from .comparison import (
    ComparisonConfiguration,
    ComparisonVerdict,
    Direction,
    Formulation,
    SidePoint,
    TimelikeTriangle,
    check_gluing,
    check_triangle,
    compare_angle,
    compare_hinge,
    compare_monotonicity,
    compare_triangle,
    enumerate_triangles,
    glue_subdivide,
    measure_angle,
    realize_triangle,
    select_geometry,
)
from .generators import SprinkleSpec, cylinder_tau, fixture, sprinkle
from .model_spaces import (
    HingeData,
    ModelPoint,
    ModelSpace,
    comparison_angle,
    finite_diameter_constant,
    law_of_cosines,
    model_geodesic,
    model_tau,
)
from .space import (
    Chain,
    DiscreteSpace,
    finite_diameter,
    geodesic_chain,
    tau_intrinsic,
    validate_axioms,
)
from .verifier import (
    Campaign,
    VerificationReport,
    check_diameter_bound,
    check_local_vs_global,
    check_nondegeneracy_lemma,
    run_campaign,
)

__version__ = "0.1.0"

__all__ = [
    "Campaign",
    "Chain",
    "ComparisonConfiguration",
    "ComparisonVerdict",
    "Direction",
    "DiscreteSpace",
    "Formulation",
    "HingeData",
    "ModelPoint",
    "ModelSpace",
    "SidePoint",
    "SprinkleSpec",
    "TimelikeTriangle",
    "VerificationReport",
    "check_diameter_bound",
    "check_gluing",
    "check_local_vs_global",
    "check_nondegeneracy_lemma",
    "check_triangle",
    "compare_angle",
    "compare_hinge",
    "compare_monotonicity",
    "compare_triangle",
    "comparison_angle",
    "cylinder_tau",
    "enumerate_triangles",
    "finite_diameter",
    "finite_diameter_constant",
    "fixture",
    "geodesic_chain",
    "glue_subdivide",
    "law_of_cosines",
    "measure_angle",
    "model_geodesic",
    "model_tau",
    "realize_triangle",
    "run_campaign",
    "select_geometry",
    "sprinkle",
    "tau_intrinsic",
    "validate_axioms",
]
