"""Discontinuous Galerkin minimization of integral energies ``int W(grad u)``.

Broken Lagrange spaces on triangle meshes, lifting-based discrete
gradients, penalized discrete energies with analytic first variations,
a line-search descent solver and a small experiment harness.
"""

from .energy import DiscreteEnergyConfig, density_from_name, energy
from .mesh import Mesh, build_structured_rect, refine_uniform, unit_square_with_triangles
from .quadrature import edge_rule, triangle_rule
from .solver import SolveOptions, SolveReport, minimize
from .space import DGFunction, ElementField, interpolate
from .lifting import discrete_gradient, lift
from .variation import fd_check, gradient

__all__ = [
    "DGFunction", "DiscreteEnergyConfig", "ElementField", "Mesh", "SolveOptions", "SolveReport",
    "build_structured_rect", "density_from_name", "discrete_gradient", "edge_rule", "energy",
    "fd_check", "gradient", "interpolate", "lift", "minimize", "refine_uniform", "triangle_rule",
    "unit_square_with_triangles",
]

__version__ = "0.1.0"
