"""teichlab: numerical laboratory for convex cocompact orbit counting in the
punctured-torus model."""

from .circle import INF, BoundaryArc
from .geometry import (
    BASEPOINT,
    Foliation,
    Geodesic,
    MappingClass,
    TeichPoint,
    apply,
    busemann,
    cross_ratio,
    distance,
    ext_length,
    gromov_product,
    intersection_number,
    translation_length,
)

__version__ = "0.1.0"

__all__ = [
    "INF",
    "BASEPOINT",
    "BoundaryArc",
    "Foliation",
    "Geodesic",
    "MappingClass",
    "TeichPoint",
    "apply",
    "busemann",
    "cross_ratio",
    "distance",
    "ext_length",
    "gromov_product",
    "intersection_number",
    "translation_length",
    "__version__",
]
