"""Numerical laboratory for the 2D Landau-de Gennes Q-tensor model.

Minimizes the eps-parameterized Q-tensor energy over disk and annulus
domains and verifies the structural features of the low-temperature regime:
biaxial escape in defect cores, single-defect localization, logarithmic
energy scaling, comparison-map bounds and radial singularity diagnostics.
"""

from . import (
    analysis,
    fieldio,
    grid,
    manifold,
    potential,
    qtensor,
    solver,
    textures,
)

__all__ = [
    "analysis",
    "fieldio",
    "grid",
    "manifold",
    "potential",
    "qtensor",
    "solver",
    "textures",
]

__version__ = "0.1.0"
