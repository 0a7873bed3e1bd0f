"""Membrane-mediated particle interactions on a C1 finite-element grid.

The package minimizes a linearized bending/tension energy of a membrane
height field around rigid particles, evaluates the interaction energy's
derivative with respect to particle positions and orientations through a
volume-form shape-derivative formula, and drives a gradient descent of
particle configurations.
"""

__version__ = "0.1.0"

from .errors import MembraneForgeError
from .geometry import Box, Configuration, RigidPose
from .curves import ParticleShape
from .solve import MembraneSolution, ProblemSpec, minimize_membrane
from .shape_derivative import GradientResult, gradient
from .flow import FlowTrajectory, gradient_flow

__all__ = [
    "__version__",
    "MembraneForgeError",
    "Box",
    "Configuration",
    "RigidPose",
    "ParticleShape",
    "ProblemSpec",
    "MembraneSolution",
    "minimize_membrane",
    "GradientResult",
    "gradient",
    "FlowTrajectory",
    "gradient_flow",
]
