"""Compactly supported velocity fields that rigidly transport the particles.

Each particle with a nonzero direction ``e = (e1, e2, e3)`` carries the rigid
generator ``w(x) = (e1, e2) + e3 * J (x - c)`` (``J`` the 90-degree rotation),
multiplied by a radial C^2 cutoff that is identically 1 on a neighbourhood of
the particle curve and vanishes before reaching any other particle or the box
boundary.  Because the cutoff is exactly 1 near the curve, the field and its
Jacobian restrict to the rigid motion there, which is what the shape-derivative
formula requires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, SupportOverlap
from .geometry import Box, Configuration, configuration_clearance

__all__ = ["VelocityField", "build_velocity", "eval_velocity", "time_velocity"]

#: 90-degree counterclockwise rotation; generator of the angular rigid mode.
_J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _smoothstep(t: np.ndarray):
    """Quintic smoothstep s(t) = 6t^5 - 15t^4 + 10t^3 on [0, 1], clamped
    outside; returns (s, s', s'') with the derivatives of the clamped profile.
    """
    tc = np.clip(t, 0.0, 1.0)
    s = tc**3 * (10.0 + tc * (-15.0 + 6.0 * tc))
    ds = 30.0 * tc**2 * (1.0 - tc) ** 2
    dds = 60.0 * tc * (1.0 - tc) * (1.0 - 2.0 * tc)
    inside = (t > 0.0) & (t < 1.0)
    return s, np.where(inside, ds, 0.0), np.where(inside, dds, 0.0)


@dataclass(frozen=True)
class VelocityField:
    """Blend of per-particle rigid generators with quintic radial cutoffs.

    ``centers`` are the particle positions, ``base_radii`` the bounding-circle
    radii the cutoff distance is measured from, and ``rho1 < rho2`` the inner
    and outer cutoff offsets: chi = 1 for dist <= rho1, chi = 0 for
    dist >= rho2.
    """

    centers: np.ndarray      # (N, 2)
    base_radii: np.ndarray   # (N,)
    rho1: np.ndarray         # (N,)
    rho2: np.ndarray         # (N,)
    directions: np.ndarray   # (N, 3)

    @property
    def active(self) -> np.ndarray:
        """Indices of particles with a nonzero direction."""
        return np.flatnonzero(np.any(self.directions != 0.0, axis=1))

    def support_radii(self) -> np.ndarray:
        """Outer radius (from each center) beyond which the field vanishes."""
        return self.base_radii + self.rho2

    def c2_norm(self) -> float:
        """Crude sup-norm bound on (V, DV, D^2 V) from the cutoff widths.

        Grows like 1/width^2 as particles approach each other, which is the
        quantity controlling the derivative approximation error.
        """
        out = 0.0
        for i in self.active:
            w = self.rho2[i] - self.rho1[i]
            amp = np.linalg.norm(self.directions[i, :2]) + abs(
                self.directions[i, 2]
            ) * (self.base_radii[i] + self.rho2[i])
            # max |s'| = 15/8, max |s''| = 10/sqrt(3) for the quintic profile
            out = max(out, amp * (1.0 + 1.875 / w + 5.7735 / w**2))
        return out


def build_velocity(
    config: Configuration,
    shapes,
    direction: np.ndarray,
    box: Box,
    fractions: tuple[float, float] = (0.25, 0.75),
) -> VelocityField:
    """Construct the admissible velocity field for a perturbation direction.

    ``direction`` is (N, 3) with one (e1, e2, e3) row per particle.  Cutoff
    radii are ``fractions`` of each particle's clearance, so the supports of
    active particles stay strictly inside the gap to their neighbours and to
    the box boundary.  Raises Infeasible if an active particle has no
    clearance, SupportOverlap if two active supports (or a support and the
    box boundary) would intersect.
    """
    f1, f2 = fractions
    if not (0.0 < f1 < f2 < 1.0):
        raise ValueError(f"cutoff fractions must satisfy 0 < f1 < f2 < 1, got {fractions}")
    direction = np.asarray(direction, dtype=float).reshape(len(config), 3)
    clearance = configuration_clearance(config, shapes, box)

    centers = np.array([pose.center for pose in config.poses])
    base = np.array([s.bounding_radius for s in shapes], dtype=float)
    n = len(config)
    active_mask = np.any(direction != 0.0, axis=1)
    for i in np.flatnonzero(active_mask):
        if clearance[i] <= 0.0:
            raise Infeasible(f"particle {i} has clearance {clearance[i]:.4g} <= 0")

    # Size the cutoff from the gaps between bounding circles (and to the box
    # boundary).  A gap shared by two active particles is split evenly, so the
    # supports are disjoint by construction for any f2 < 1.
    room = np.empty(n)
    for i in range(n):
        gap_i = float(box.boundary_distance(centers[i][None, :])[0]) - base[i]
        for j in range(n):
            if j == i:
                continue
            gap = float(np.linalg.norm(centers[i] - centers[j])) - base[i] - base[j]
            if active_mask[j]:
                gap *= 0.5
            gap_i = min(gap_i, gap)
        room[i] = gap_i
    rho1 = f1 * room
    rho2 = f2 * room
    field = VelocityField(centers, base, rho1, rho2, direction)

    active = field.active
    for i in active:
        if room[i] <= 0.0:
            raise Infeasible(
                f"particle {i} has no bounding-circle gap to fit a cutoff (room {room[i]:.4g})"
            )
    outer = field.support_radii()
    for i in active:
        if float(box.boundary_distance(centers[i][None, :])[0]) <= outer[i]:
            raise SupportOverlap(f"support of particle {i} reaches the box boundary")
        for j in range(len(config)):
            if j == i:
                continue
            reach = outer[j] if j in active else base[j]
            gap = float(np.linalg.norm(centers[i] - centers[j]))
            if gap <= outer[i] + reach:
                raise SupportOverlap(
                    f"supports of particles {i} and {j} overlap "
                    f"(gap {gap:.4g} <= {outer[i] + reach:.4g})"
                )
    return field


def eval_velocity(field: VelocityField, x: np.ndarray):
    """Evaluate (V, DV, Laplacian V) at points x of shape (n, 2).

    Returns arrays of shapes (n, 2), (n, 2, 2) and (n, 2).  All derivatives
    are closed-form: the cutoff is polynomial in the radial distance, so no
    differencing is involved.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    V = np.zeros((n, 2))
    DV = np.zeros((n, 2, 2))
    lapV = np.zeros((n, 2))

    for i in field.active:
        dx = x - field.centers[i]
        r = np.linalg.norm(dx, axis=1)
        d = r - field.base_radii[i]
        width = field.rho2[i] - field.rho1[i]
        t = (field.rho2[i] - d) / width
        s, ds, dds = _smoothstep(t)
        hot = s > 0.0
        if not np.any(hot):
            continue
        e1, e2, e3 = field.directions[i]
        w = np.empty((n, 2))
        w[:, 0] = e1 - e3 * dx[:, 1]
        w[:, 1] = e2 + e3 * dx[:, 0]

        # chi = s(t(r)); radial chain rule with t' = -1/width.
        with np.errstate(invalid="ignore", divide="ignore"):
            er = np.where(r[:, None] > 0.0, dx / np.maximum(r, 1e-300)[:, None], 0.0)
        dchi_dr = -ds / width
        grad_chi = dchi_dr[:, None] * er
        # Laplacian of a radial function: chi'' + chi'/r.
        lap_chi = dds / width**2 + np.where(r > 0.0, dchi_dr / np.maximum(r, 1e-300), 0.0)

        V[hot] += s[hot, None] * w[hot]
        DV[hot] += w[hot, :, None] * grad_chi[hot, None, :]
        DV[hot] += (s[hot] * e3)[:, None, None] * _J
        # Delta(chi * w) = lap(chi) w + 2 grad(chi) . grad(w); w is affine with
        # constant Jacobian e3*J, so the cross term is 2 e3 J grad(chi).
        lapV[hot] += lap_chi[hot, None] * w[hot]
        lapV[hot] += 2.0 * e3 * grad_chi[hot] @ _J.T
    return V, DV, lapV


def time_velocity(
    config: Configuration,
    shapes,
    direction: np.ndarray,
    box: Box,
    t: float,
    fractions: tuple[float, float] = (0.25, 0.75),
) -> VelocityField:
    """Velocity field of the moving family at time t: the field is rebuilt at
    the shifted configuration p + t*q with the same direction q, so the cutoff
    tracks the transported particles.  At t = 0 this is build_velocity.
    """
    direction = np.asarray(direction, dtype=float).reshape(len(config), 3)
    moved = config.shifted(t * direction)
    return build_velocity(moved, shapes, direction, box, fractions)
