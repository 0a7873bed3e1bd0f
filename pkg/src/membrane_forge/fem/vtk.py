"""Legacy-VTK ASCII export of a membrane field on its grid."""

from __future__ import annotations

from .space import MembraneField


def write_vtk(fld: MembraneField, path: str, name: str = "membrane") -> None:
    """Write u, du/dx, du/dy at the grid nodes as structured points."""
    sp = fld.space
    nxn, nyn = sp.nx + 1, sp.ny + 1
    coeffs = fld.coefficients.reshape(-1, 4)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{name}\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nxn} {nyn} 1\n")
        fh.write(f"ORIGIN {sp.box.xmin:.17g} {sp.box.ymin:.17g} 0\n")
        fh.write(f"SPACING {sp.hx:.17g} {sp.hy:.17g} 1\n")
        fh.write(f"POINT_DATA {nxn * nyn}\n")
        for label, col in (("u", 0), ("du_dx", 1), ("du_dy", 2)):
            fh.write(f"SCALARS {label} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            for v in coeffs[:, col]:
                fh.write(f"{v:.17g}\n")
