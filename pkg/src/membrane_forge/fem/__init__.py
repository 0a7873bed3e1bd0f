from .space import GridSpace, MembraneField, build_space
from .assembly import assemble_bending, local_matrices
from .cutquad import CutQuadrature, cut_quadrature
from .vtk import write_vtk

__all__ = [
    "GridSpace",
    "MembraneField",
    "build_space",
    "assemble_bending",
    "local_matrices",
    "CutQuadrature",
    "cut_quadrature",
    "write_vtk",
]
