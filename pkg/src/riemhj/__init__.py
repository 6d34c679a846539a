"""Riemannian geometry kernels, nonsmooth analysis probes, and viscosity
solvers for first-order Hamilton-Jacobi equations on low-dimensional
manifolds."""

from .manifolds import get_manifold

__version__ = "0.1.0"
__all__ = ["get_manifold", "__version__"]
