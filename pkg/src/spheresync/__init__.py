"""Synchronization of unit vectors under pairwise and d-body couplings.

Gradient dynamics combining the all-to-all pairwise coupling with the
antisymmetric d-body (signature) coupling, exact steady-state catalogs for
d = 2..5, the reduced three-node flow, and analysis/CLI tooling.
"""

__version__ = "0.1.0"

from . import analysis, benchmark, catalog, dynamics, geometry, io, kernels, reduced

__all__ = [
    "analysis",
    "benchmark",
    "catalog",
    "dynamics",
    "geometry",
    "io",
    "kernels",
    "reduced",
    "__version__",
]
