"""Pseudo-spectral laboratory for a two-component higher-order
Camassa-Holm system: time integration, continuity-modulus experiments,
and empirical inequality probes on the periodic domain."""

from .spectral import Field, Grid

__version__ = "0.1.0"

__all__ = ["Field", "Grid", "__version__"]
