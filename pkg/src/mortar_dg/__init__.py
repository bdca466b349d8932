"""Nonconforming discontinuous Galerkin spectral elements for elastodynamics.

The package builds 2:1 adapted hexahedral meshes with mortar elements,
computes curvilinear metric terms with three geometry treatments, and
evaluates energy-stable (``"sfim"``) and projection-based (``"afim"``)
semi-discrete operators for the velocity-stress system.
"""

from .config import ExperimentConfig, load_config
from .dg_operator import DGOperator
from .geometry_metrics import TransformSpec, build_geometry
from .material_state import State, random_material, uniform_material
from .mesh_topology import build_adapted_box, build_mortars, checkerboard, refine_uniform

__all__ = [
    "DGOperator",
    "ExperimentConfig",
    "State",
    "TransformSpec",
    "build_adapted_box",
    "build_geometry",
    "build_mortars",
    "checkerboard",
    "load_config",
    "random_material",
    "refine_uniform",
    "uniform_material",
]
