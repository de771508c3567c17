"""Harmonic analysis on rank-one symmetric spaces and spectral annulus recovery."""

__version__ = "0.1.0"

from .core import (
    RadialFunction,
    RadialGrid,
    SpaceParams,
    SpectralFunction,
    SpectralGrid,
    integrate_radial,
    make_radial_grid,
    make_space,
    make_spectral_grid,
    named_space,
)
from . import annulus, norms, spherical, transforms

__all__ = [
    "__version__",
    "annulus",
    "norms",
    "spherical",
    "transforms",
    "RadialFunction",
    "RadialGrid",
    "SpaceParams",
    "SpectralFunction",
    "SpectralGrid",
    "integrate_radial",
    "make_radial_grid",
    "make_space",
    "make_spectral_grid",
    "named_space",
]
