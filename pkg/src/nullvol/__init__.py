"""Numerical checks for volume variations of marginally trapped submanifolds."""

from .ambient import AmbientChart, chart_from_name, christoffel, exp_map, nec_check, ricci, riemann
from .catalog import CATALOG_IDS, ExampleRecord, build, describe, verify
from .immersion import Immersion, ParamDomain, mean_curvature_vector, second_fundamental_form, volume
from .nullframe import NullNormalFrame, build_null_frame, dual_map, shape_operator, theta
from .nullspace import InnerVariation, NullSpaceMap, degeneracy_report, invert_alpha, reparametrize, theorem_suite
from .variation import (
    VariationSpec,
    deform,
    first_variation_fd,
    first_variation_formula,
    second_variation_characteristic_formula,
    second_variation_fd,
    second_variation_general_formula,
)

__version__ = "0.1.0"

__all__ = [
    "AmbientChart",
    "CATALOG_IDS",
    "ExampleRecord",
    "Immersion",
    "InnerVariation",
    "NullNormalFrame",
    "NullSpaceMap",
    "ParamDomain",
    "VariationSpec",
    "build",
    "build_null_frame",
    "chart_from_name",
    "christoffel",
    "deform",
    "degeneracy_report",
    "describe",
    "dual_map",
    "exp_map",
    "first_variation_fd",
    "first_variation_formula",
    "invert_alpha",
    "mean_curvature_vector",
    "nec_check",
    "reparametrize",
    "ricci",
    "riemann",
    "second_fundamental_form",
    "second_variation_characteristic_formula",
    "second_variation_fd",
    "second_variation_general_formula",
    "shape_operator",
    "theorem_suite",
    "theta",
    "verify",
    "volume",
]
