"""Coercive space-time Galerkin method for the 1D acoustic wave equation.

The variational formulation pairs the wave operator with a first-order
Morawetz multiplier, is coercive and continuous in a graph norm on the
space-time cylinder, and is discretised with the tensor-product cubic
Hermite (Bogner-Fox-Schmit) element.
"""

__version__ = "0.1.0"

from .geometry import ConfigurationError, DofMap, Geometry, Mesh, build_mesh, star_shape_params
from .operators import FormulationParams, Jet2, morawetz, waveop
from .problems import ProblemSpec, catalog, data_norm, double_gaussian, load_problem

__all__ = [
    "ConfigurationError",
    "DofMap",
    "FormulationParams",
    "Geometry",
    "Jet2",
    "Mesh",
    "ProblemSpec",
    "build_mesh",
    "catalog",
    "data_norm",
    "double_gaussian",
    "load_problem",
    "morawetz",
    "star_shape_params",
    "waveop",
    "__version__",
]
