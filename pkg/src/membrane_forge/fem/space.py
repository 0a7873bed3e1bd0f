"""C1 bicubic-Hermite grid space (Bogner-Fox-Schmit layout) and field evaluation.

Each grid node carries four degrees of freedom: value, d/dx, d/dy, d2/dxdy.
DOF numbering is deterministic: nodes row-major, DOFs value/dx/dy/dxy within
a node.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import OutOfDomain
from ..geometry import Box


def hermite_1d(t: np.ndarray, h: float, order: int) -> np.ndarray:
    """The four cubic Hermite functions on [0, h] at t = x/h, differentiated
    ``order`` times with respect to x. Columns: value-left, slope-left,
    value-right, slope-right."""
    t = np.asarray(t, dtype=float)
    if order == 0:
        cols = [
            1 - 3 * t**2 + 2 * t**3,
            h * (t - 2 * t**2 + t**3),
            3 * t**2 - 2 * t**3,
            h * (-(t**2) + t**3),
        ]
    elif order == 1:
        cols = [
            (-6 * t + 6 * t**2) / h,
            1 - 4 * t + 3 * t**2,
            (6 * t - 6 * t**2) / h,
            -2 * t + 3 * t**2,
        ]
    elif order == 2:
        cols = [
            (-6 + 12 * t) / h**2,
            (-4 + 6 * t) / h,
            (6 - 12 * t) / h**2,
            (-2 + 6 * t) / h,
        ]
    else:
        raise ValueError("derivative order must be 0, 1 or 2")
    return np.stack(cols, axis=-1)


# Local function layout: 4 nodes [(0,0), (1,0), (0,1), (1,1)] times 4 DOF
# types [value, dx, dy, dxy]; index = 4*node + dof.
_NODE_OFFSETS = np.array([(0, 0), (1, 0), (0, 1), (1, 1)])
# 1D Hermite column picked in x and y per local function.
_AX = np.array([2 * ix + (1 if c in (1, 3) else 0) for ix, _ in _NODE_OFFSETS for c in range(4)])
_AY = np.array([2 * iy + (1 if c in (2, 3) else 0) for _, iy in _NODE_OFFSETS for c in range(4)])


def basis(tx: np.ndarray, ty: np.ndarray, hx: float, hy: float, dx: int, dy: int) -> np.ndarray:
    """All 16 local shape functions (d/dx)^dx (d/dy)^dy at local coords (tx, ty).

    Returns shape (*tx.shape, 16).
    """
    Hx = hermite_1d(tx, hx, dx)
    Hy = hermite_1d(ty, hy, dy)
    return Hx[..., _AX] * Hy[..., _AY]


@dataclass(frozen=True)
class GridSpace:
    box: Box
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("need at least 4 elements per direction")

    @property
    def hx(self) -> float:
        return (self.box.xmax - self.box.xmin) / self.nx

    @property
    def hy(self) -> float:
        return (self.box.ymax - self.box.ymin) / self.ny

    @property
    def total_dofs(self) -> int:
        return 4 * (self.nx + 1) * (self.ny + 1)

    def node_index(self, i, j):
        return j * (self.nx + 1) + i

    def element_dofs(self, ei, ej) -> np.ndarray:
        """Global DOF indices of element (ei, ej), shape (..., 16)."""
        ei = np.asarray(ei)
        ej = np.asarray(ej)
        nodes = np.stack(
            [self.node_index(ei + di, ej + dj) for di, dj in _NODE_OFFSETS], axis=-1
        )
        return (4 * nodes[..., :, None] + np.arange(4)).reshape(*ei.shape, 16)

    def all_element_dofs(self) -> np.ndarray:
        """(nx*ny, 16) DOF map, elements row-major."""
        ej, ei = np.divmod(np.arange(self.nx * self.ny), self.nx)
        return self.element_dofs(ei, ej)

    def element_origin(self, ei, ej):
        return (
            self.box.xmin + np.asarray(ei) * self.hx,
            self.box.ymin + np.asarray(ej) * self.hy,
        )

    def boundary_dofs(self) -> np.ndarray:
        """All four DOFs of every node on the outer boundary."""
        ii, jj = np.meshgrid(np.arange(self.nx + 1), np.arange(self.ny + 1))
        on_bnd = (ii == 0) | (ii == self.nx) | (jj == 0) | (jj == self.ny)
        nodes = self.node_index(ii[on_bnd], jj[on_bnd])
        return (4 * nodes[:, None] + np.arange(4)).ravel()

    def locate(self, pts: np.ndarray):
        """Element indices and local coordinates of points; raises OutOfDomain."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        eps = 1e-12 * max(self.box.widths)
        inside = (
            (pts[:, 0] >= self.box.xmin - eps)
            & (pts[:, 0] <= self.box.xmax + eps)
            & (pts[:, 1] >= self.box.ymin - eps)
            & (pts[:, 1] <= self.box.ymax + eps)
        )
        if not inside.all():
            bad = pts[~inside][0]
            raise OutOfDomain(f"point ({bad[0]:.6g}, {bad[1]:.6g}) outside the box")
        sx = (pts[:, 0] - self.box.xmin) / self.hx
        sy = (pts[:, 1] - self.box.ymin) / self.hy
        ei = np.clip(np.floor(sx).astype(np.int64), 0, self.nx - 1)
        ej = np.clip(np.floor(sy).astype(np.int64), 0, self.ny - 1)
        return ei, ej, sx - ei, sy - ej

    def interpolate(
        self,
        f: Callable,
        fx: Optional[Callable] = None,
        fy: Optional[Callable] = None,
        fxy: Optional[Callable] = None,
        fd_step: float = 1e-6,
    ) -> "MembraneField":
        """Hermite interpolation of a function onto the space.

        Derivative callables may be omitted, in which case central finite
        differences of ``f`` are used (adequate for plotting, not for
        reproduction tests).
        """
        x = self.box.xmin + self.hx * np.arange(self.nx + 1)
        y = self.box.ymin + self.hy * np.arange(self.ny + 1)
        X, Y = np.meshgrid(x, y)
        d = fd_step
        if fx is None:
            fx = lambda X, Y: (f(X + d, Y) - f(X - d, Y)) / (2 * d)
        if fy is None:
            fy = lambda X, Y: (f(X, Y + d) - f(X, Y - d)) / (2 * d)
        if fxy is None:
            fxy = lambda X, Y: (fx(X, Y + d) - fx(X, Y - d)) / (2 * d)
        coeffs = np.zeros(self.total_dofs)
        vals = [f(X, Y), fx(X, Y), fy(X, Y), fxy(X, Y)]
        for c, v in enumerate(vals):
            coeffs[4 * self.node_index(*np.meshgrid(np.arange(self.nx + 1), np.arange(self.ny + 1))) + c] = np.broadcast_to(v, X.shape)
        return MembraneField(self, coeffs)


def build_space(box: Box, nx: int, ny: int) -> GridSpace:
    return GridSpace(box=box, nx=nx, ny=ny)


@dataclass
class MembraneField:
    """A coefficient vector over a GridSpace."""

    space: GridSpace
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.total_dofs,):
            raise ValueError("coefficient vector has wrong length")

    def evaluate(self, pts: np.ndarray):
        """Value, gradient and Hessian at the given points.

        Returns (u (n,), grad (n,2), hess (n,2,2)).
        """
        sp = self.space
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ei, ej, tx, ty = sp.locate(pts)
        dofs = sp.element_dofs(ei, ej)
        ce = self.coefficients[dofs]
        out = {}
        for name, dx, dy in (
            ("u", 0, 0),
            ("ux", 1, 0),
            ("uy", 0, 1),
            ("uxx", 2, 0),
            ("uxy", 1, 1),
            ("uyy", 0, 2),
        ):
            B = basis(tx, ty, sp.hx, sp.hy, dx, dy)
            out[name] = (B * ce).sum(axis=1)
        grad = np.stack([out["ux"], out["uy"]], axis=-1)
        hess = np.stack(
            [
                np.stack([out["uxx"], out["uxy"]], axis=-1),
                np.stack([out["uxy"], out["uyy"]], axis=-1),
            ],
            axis=-2,
        )
        return out["u"], grad, hess


def evaluate_field(field: MembraneField, x: np.ndarray):
    """Single-point convenience wrapper: (u, grad, hess) at x."""
    u, grad, hess = field.evaluate(np.asarray(x, dtype=float)[None, :])
    return float(u[0]), grad[0], hess[0]
