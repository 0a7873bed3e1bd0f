"""Trace operators, rigid-mode projection, and penalty assembly of the
parametric boundary conditions.

The parametric conditions (height and slope known only up to a rigid
tilt-and-offset triple gamma per particle) are enforced by a quadratic
penalty on the reference curves with the gamma triples appended to the
system as explicit unknowns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .curves import CurveQuadrature, ParticleShape, boundary_data
from .errors import SingularGram
from .fem.space import GridSpace, MembraneField, basis
from .geometry import Configuration, RigidPose, rigid_map, rotation_matrix

_GRAM_COND_LIMIT = 1e12


@dataclass(frozen=True)
class TraceSamples:
    """Pullback of u and its normal derivative to one reference curve."""

    values: np.ndarray
    normal_derivs: np.ndarray


@dataclass(frozen=True)
class RigidModeBasis:
    """Samples of the rigid modes (y1, y2, 1) and their normal derivatives
    (nu1, nu2, 0) on a reference curve quadrature."""

    eta: np.ndarray  # (n, 3)
    eta_nu: np.ndarray  # (n, 3)
    weights: np.ndarray  # (n,)

    @staticmethod
    def from_quadrature(quad: CurveQuadrature) -> "RigidModeBasis":
        n = len(quad)
        eta = np.column_stack([quad.points[:, 0], quad.points[:, 1], np.ones(n)])
        eta_nu = np.column_stack(
            [quad.normals[:, 0], quad.normals[:, 1], np.zeros(n)]
        )
        return RigidModeBasis(eta=eta, eta_nu=eta_nu, weights=quad.weights)


def trace(
    fld: MembraneField, shape: ParticleShape, pose: RigidPose, quad: CurveQuadrature
) -> TraceSamples:
    """Evaluate u and its normal derivative on the mapped curve, pulled back
    to the reference quadrature points. The world normal is the rotated
    reference normal."""
    world = rigid_map(pose, quad.points)
    u, grad, _ = fld.evaluate(world)
    nu_world = quad.normals @ rotation_matrix(pose.alpha3).T
    return TraceSamples(values=u, normal_derivs=(grad * nu_world).sum(axis=1))


def gram(shape: ParticleShape, quad: CurveQuadrature) -> np.ndarray:
    """Rigid-mode Gram matrix with entries <eta_k, eta_l> on the curve."""
    b = RigidModeBasis.from_quadrature(quad)
    G = b.eta.T @ (b.weights[:, None] * b.eta)
    if np.linalg.cond(G) > _GRAM_COND_LIMIT:
        raise SingularGram("rigid-mode Gram matrix is numerically singular")
    return G


def project(traces: TraceSamples, basis_: RigidModeBasis) -> TraceSamples:
    """Remove the rigid-mode component fitted to the value trace from both
    the value trace and the slope trace. Idempotent."""
    G = basis_.eta.T @ (basis_.weights[:, None] * basis_.eta)
    if np.linalg.cond(G) > _GRAM_COND_LIMIT:
        raise SingularGram("rigid-mode Gram matrix is numerically singular")
    coeff = np.linalg.solve(G, basis_.eta.T @ (basis_.weights * traces.values))
    return TraceSamples(
        values=traces.values - basis_.eta @ coeff,
        normal_derivs=traces.normal_derivs - basis_.eta_nu @ coeff,
    )


def recover_gamma(
    traces: TraceSamples, basis_: RigidModeBasis, g0: np.ndarray
) -> np.ndarray:
    """Least-squares rigid-mode coefficients of the value-trace residual."""
    G = basis_.eta.T @ (basis_.weights[:, None] * basis_.eta)
    return np.linalg.solve(G, basis_.eta.T @ (basis_.weights * (traces.values - g0)))


def projected_residual_norms(
    traces: TraceSamples, basis_: RigidModeBasis, g0: np.ndarray, g1: np.ndarray
) -> tuple[float, float]:
    """L2 norms of P(Tu - g), split into value and slope components."""
    res = project(
        TraceSamples(values=traces.values - g0, normal_derivs=traces.normal_derivs - g1),
        basis_,
    )
    w = basis_.weights
    return (
        float(np.sqrt(w @ res.values**2)),
        float(np.sqrt(w @ res.normal_derivs**2)),
    )


def _trace_rows(space: GridSpace, pose: RigidPose, quad: CurveQuadrature):
    """Sparse FE rows for point values and normal derivatives on a mapped curve.

    Returns (row_dofs (n,16), value_coeffs (n,16), slope_coeffs (n,16))."""
    world = rigid_map(pose, quad.points)
    ei, ej, tx, ty = space.locate(world)
    dofs = space.element_dofs(ei, ej)
    nu_world = quad.normals @ rotation_matrix(pose.alpha3).T
    Bval = basis(tx, ty, space.hx, space.hy, 0, 0)
    Bx = basis(tx, ty, space.hx, space.hy, 1, 0)
    By = basis(tx, ty, space.hx, space.hy, 0, 1)
    Bslope = nu_world[:, :1] * Bx + nu_world[:, 1:] * By
    return dofs, Bval, Bslope


def assemble_penalty(
    space: GridSpace,
    config: Configuration,
    shapes,
    quads,
    epsilon0: float,
    epsilon1: float,
    freeze_tilt=None,
):
    """Quadratic penalty enforcing the parametric boundary conditions.

    Unknowns are the FE coefficients followed by one gamma triple per
    particle. Returns (matrix, rhs) of size ndof + 3N, plus the gamma offset.
    Particles with freeze_tilt pin gamma_1 = gamma_2 = 0 (only the height
    offset remains free)."""
    N = len(config)
    ndof = space.total_dofs
    ntot = ndof + 3 * N
    if freeze_tilt is None:
        freeze_tilt = [False] * N

    mats = []
    rhs = np.zeros(ntot)
    frozen_diag = np.zeros(ntot)
    for i, (pose, shape, quad) in enumerate(zip(config.poses, shapes, quads)):
        g0, g1 = boundary_data(shape, quad)
        dofs, Bval, Bslope = _trace_rows(space, pose, quad)
        b = RigidModeBasis.from_quadrature(quad)
        eta = b.eta.copy()
        eta_nu = b.eta_nu.copy()
        if freeze_tilt[i]:
            eta[:, :2] = 0.0
            eta_nu[:, :2] = 0.0
            frozen_diag[ndof + 3 * i] = 1.0
            frozen_diag[ndof + 3 * i + 1] = 1.0
        n = len(quad)
        gdofs = ndof + 3 * i + np.arange(3)
        cols = np.concatenate([dofs, np.broadcast_to(gdofs, (n, 3))], axis=1)
        rows = np.repeat(np.arange(n)[:, None], 19, axis=1)
        for B, etas, g, eps in ((Bval, eta, g0, epsilon0), (Bslope, eta_nu, g1, epsilon1)):
            data = np.concatenate([B, -etas], axis=1)
            P = sp.coo_matrix(
                (data.ravel(), (rows.ravel(), cols.ravel())), shape=(n, ntot)
            ).tocsr()
            W = sp.diags(quad.weights / eps)
            mats.append(P.T @ W @ P)
            rhs += P.T @ (quad.weights / eps * g)
    if mats:
        A = sum(mats[1:], start=mats[0])
    else:
        A = sp.csr_matrix((ntot, ntot))
    if frozen_diag.any():
        A = A + sp.diags(frozen_diag)
    return A.tocsr(), rhs
