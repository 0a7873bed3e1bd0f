"""Assembly of the bending bilinear form over the uniform grid."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .space import GridSpace, basis

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(4)
# mapped to [0, 1]
_G01 = 0.5 * (_GAUSS_NODES + 1.0)
_W01 = 0.5 * _GAUSS_WEIGHTS


def gauss_points_2d():
    """4x4 tensor Gauss rule on the unit square: (16,2) nodes, (16,) weights."""
    tx, ty = np.meshgrid(_G01, _G01)
    wx, wy = np.meshgrid(_W01, _W01)
    return np.column_stack([tx.ravel(), ty.ravel()]), (wx * wy).ravel()


def local_matrices(space: GridSpace):
    """Element matrices (K_bend, K_grad) for integral of (Lap v)^2 and |grad v|^2.

    All elements of the uniform grid share these. The 4x4 Gauss rule is exact
    for the bicubic integrands."""
    hx, hy = space.hx, space.hy
    pts, w = gauss_points_2d()
    w = w * hx * hy
    Bxx = basis(pts[:, 0], pts[:, 1], hx, hy, 2, 0)
    Byy = basis(pts[:, 0], pts[:, 1], hx, hy, 0, 2)
    Bx = basis(pts[:, 0], pts[:, 1], hx, hy, 1, 0)
    By = basis(pts[:, 0], pts[:, 1], hx, hy, 0, 1)
    lap = Bxx + Byy
    K_bend = np.einsum("q,qa,qb->ab", w, lap, lap)
    K_grad = np.einsum("q,qa,qb->ab", w, Bx, Bx) + np.einsum("q,qa,qb->ab", w, By, By)
    return K_bend, K_grad


def assemble_bending(
    space: GridSpace,
    kappa: float,
    sigma: float = 0.0,
    quad=None,
    interior_scale: float = 0.0,
) -> sp.csr_matrix:
    """Sparse symmetric matrix S with v^T S v = int kappa (Lap v)^2 + sigma |grad v|^2.

    Without ``quad`` the integral runs over the full box. With a CutQuadrature
    it runs over the particle-free region: uncut elements use the exact
    element matrices; cut elements are written in complement form, the exact
    full-element matrix minus the subcell rule over the *removed* (interior)
    part.  The complement form makes an element's contribution continuous as
    it switches between the cut and uncut class while a particle moves: a
    fully exterior cut element reduces to the exact matrix identically, so
    J(p) has no class-transition jumps for finite differences to amplify.
    ``interior_scale`` adds that fraction of the full element matrix on every
    near-particle element, regularizing the otherwise unconstrained DOFs
    inside the particles (and dominating the subcell rule's small indefinite
    residue on fully interior elements)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    K_bend, K_grad = local_matrices(space)
    K = kappa * K_bend + sigma * K_grad
    dofs = space.all_element_dofs()
    nel = dofs.shape[0]
    rows = np.repeat(dofs, 16, axis=1).ravel()
    cols = np.tile(dofs, (1, 16)).ravel()
    n = space.total_dofs
    if quad is None:
        data = np.tile(K.ravel(), nel)
        return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()

    data = np.zeros((nel, 256))
    data[quad.uncut_elements] = K.ravel()
    if len(quad.cut_elements):
        sub = quad.subcells
        hx, hy = space.hx, space.hy
        w = hx * hy / len(sub)
        lap = basis(sub[:, 0], sub[:, 1], hx, hy, 2, 0) + basis(
            sub[:, 0], sub[:, 1], hx, hy, 0, 2
        )
        Bx = basis(sub[:, 0], sub[:, 1], hx, hy, 1, 0)
        By = basis(sub[:, 0], sub[:, 1], hx, hy, 0, 1)
        Wk = (1.0 - quad.keep.astype(float)) * w
        K_rm = kappa * np.einsum("ck,ka,kb->cab", Wk, lap, lap)
        if sigma:
            K_rm += sigma * (
                np.einsum("ck,ka,kb->cab", Wk, Bx, Bx)
                + np.einsum("ck,ka,kb->cab", Wk, By, By)
            )
        data[quad.cut_elements] = ((1.0 + interior_scale) * K - K_rm).reshape(-1, 256)
    return sp.coo_matrix((data.ravel(), (rows, cols)), shape=(n, n)).tocsr()
