from .base import ChartManifold, Manifold
from .catalog import (
    CATALOG_NAMES,
    Euclidean,
    FlatTorus,
    Hyperbolic,
    Sphere,
    SurfaceOfRevolution,
    get_manifold,
    make_cusp,
    make_funnel,
)

__all__ = [
    "CATALOG_NAMES",
    "ChartManifold",
    "Euclidean",
    "FlatTorus",
    "Hyperbolic",
    "Manifold",
    "Sphere",
    "SurfaceOfRevolution",
    "get_manifold",
    "make_cusp",
    "make_funnel",
]
