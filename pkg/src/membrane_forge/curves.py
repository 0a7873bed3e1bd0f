"""Reference particle curves, their quadrature rules, and boundary data.

Shapes are star-shaped with respect to their reference origin and described
either analytically (circle, ellipse) or as the zero level set of a polynomial
F with F > 0 inside the particle. Normals follow the convention of the outer
normal of the membrane domain, i.e. they point INTO the particle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import RootFindFailure
from .expressions import compile_expression

_ROOT_SAMPLES = 64


@dataclass(frozen=True)
class CurveQuadrature:
    """Arc-length quadrature on a reference curve.

    ``normals`` are unit vectors pointing into the particle interior,
    ``tangents`` are unit vectors orthogonal to them.
    """

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ParticleShape:
    """A reference curve with boundary height/slope data.

    kind:
        "circle"   -- params ("radius",)
        "ellipse"  -- params ("a", "b")
        "implicit" -- zero level set of ``levelset`` (polynomial in x, y),
                      positive inside the particle
    g0, g1:
        expressions in x, y (g1 additionally in nu1, nu2) giving the
        membrane height and slope prescribed on the reference curve.
    """

    kind: str
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    levelset: str = ""
    g0: str = "0"
    g1: str = "0"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("circle", "ellipse", "implicit"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.kind == "implicit" and not self.levelset:
            raise ValueError("implicit shape requires a levelset expression")

    def _levelset_funcs(self):
        if "F" not in self._cache:
            F = compile_expression(self.levelset, ("x", "y"))
            Fx = compile_expression(self.levelset, ("x", "y"), diff="x")
            Fy = compile_expression(self.levelset, ("x", "y"), diff="y")
            self._cache["F"] = (F, Fx, Fy)
        return self._cache["F"]

    @property
    def bounding_radius(self) -> float:
        if self.kind == "circle":
            return self.radius
        if self.kind == "ellipse":
            return max(self.a, self.b)
        if "rbound" not in self._cache:
            theta = np.linspace(0.0, 2 * math.pi, 720, endpoint=False)
            self._cache["rbound"] = float(self.radius_profile(theta).max()) * 1.02
        return self._cache["rbound"]

    def radius_profile(self, theta: np.ndarray) -> np.ndarray:
        """Radial parameterization r(theta) of the curve."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "circle":
            return np.full_like(theta, self.radius)
        if self.kind == "ellipse":
            return self.a * self.b / np.sqrt(
                (self.b * np.cos(theta)) ** 2 + (self.a * np.sin(theta)) ** 2
            )
        return self._implicit_radius(theta)

    def _implicit_radius(self, theta: np.ndarray) -> np.ndarray:
        F, _, _ = self._levelset_funcs()
        # F > 0 at the origin side, < 0 far outside; bracket the sign change
        # on each ray and polish with Brent's method.
        rmax = self._cache.get("rbound", None)
        if rmax is None:
            # Bootstrap without the cached bound: scan a generous range.
            rmax = self._scan_bound(F)
        out = np.empty_like(theta)
        for k, th in np.ndenumerate(theta):
            c, s = math.cos(th), math.sin(th)

            def f(r):
                return F(r * c, r * s)

            rs = np.linspace(1e-9, rmax, _ROOT_SAMPLES)
            vals = np.array([f(r) for r in rs])
            sign_change = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0]
            if len(sign_change) == 0:
                raise RootFindFailure(
                    f"no radial root at theta={th:.4f} in (0, {rmax:.3g}]"
                )
            i = sign_change[0]
            out[k] = brentq(f, rs[i], rs[i + 1], xtol=1e-14, rtol=1e-15)
        return out

    def _scan_bound(self, F) -> float:
        # Find a radius beyond which F < 0 on all tested rays.
        for rmax in (1.0, 2.0, 4.0, 8.0, 16.0):
            theta = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
            if all(F(rmax * math.cos(t), rmax * math.sin(t)) < 0 for t in theta):
                return 2.0 * rmax
        raise RootFindFailure("level set does not enclose a bounded region")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Inside test in reference coordinates."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "circle":
            return x**2 + y**2 < self.radius**2
        if self.kind == "ellipse":
            return (x / self.a) ** 2 + (y / self.b) ** 2 < 1.0
        F, _, _ = self._levelset_funcs()
        return np.asarray(F(x, y)) > 0.0

    def boundary_offset(self, pts: np.ndarray) -> np.ndarray:
        """Approximate signed distance to the curve, positive outside.

        Exact for circles; first order (level set value over gradient norm)
        for ellipses and implicit shapes, which is all the cut quadrature's
        fractional subcell weights need.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "circle":
            return np.linalg.norm(pts, axis=1) - self.radius
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "ellipse":
            F = 1.0 - (x / self.a) ** 2 - (y / self.b) ** 2
        else:
            Fn, _, _ = self._levelset_funcs()
            F = np.asarray(Fn(x, y), dtype=float)
        g = self.levelset_gradient(pts)
        return -F / np.maximum(np.linalg.norm(g, axis=1), 1e-12)

    def levelset_gradient(self, pts: np.ndarray) -> np.ndarray:
        """Gradient of the inside-positive level set; points into the particle."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "circle":
            return np.column_stack([-2 * x, -2 * y])
        if self.kind == "ellipse":
            return np.column_stack([-2 * x / self.a**2, -2 * y / self.b**2])
        _, Fx, Fy = self._levelset_funcs()
        gx = np.broadcast_to(np.asarray(Fx(x, y), dtype=float), x.shape)
        gy = np.broadcast_to(np.asarray(Fy(x, y), dtype=float), y.shape)
        return np.column_stack([gx, gy])


def discretize_shape(shape: ParticleShape, n: int = 256) -> CurveQuadrature:
    """Arc-length quadrature with n points: 2-point Gauss on n/2 polar sectors.

    Implicit curves are resolved by radial root finding; weights carry the
    exact arc-length factor sqrt(r^2 + r'^2) from implicit differentiation.
    """
    if n < 16:
        raise ValueError("need n >= 16 quadrature points")
    nsec = n // 2
    edges = np.linspace(0.0, 2 * math.pi, nsec + 1)
    # 2-point Gauss nodes on each sector
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    gp = 1.0 / math.sqrt(3.0)
    theta = np.concatenate([mid - half * gp, mid + half * gp])
    order = np.argsort(theta)
    theta = theta[order]
    wtheta = np.concatenate([half, half])[order]

    r = shape.radius_profile(theta)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    grad = shape.levelset_gradient(pts)
    gnorm = np.linalg.norm(grad, axis=1)
    normals = grad / gnorm[:, None]
    tangents = np.column_stack([-normals[:, 1], normals[:, 0]])

    # r'(theta) from dF/dtheta = 0 along the curve
    e_r = np.column_stack([np.cos(theta), np.sin(theta)])
    e_t = np.column_stack([-np.sin(theta), np.cos(theta)])
    denom = (grad * e_r).sum(axis=1)
    rprime = -r * (grad * e_t).sum(axis=1) / denom
    weights = wtheta * np.sqrt(r**2 + rprime**2)
    return CurveQuadrature(points=pts, weights=weights, normals=normals, tangents=tangents)


def boundary_data(shape: ParticleShape, quad: CurveQuadrature):
    """Sample the height g0 and slope g1 of a shape at its quadrature points.

    The expressions live in reference coordinates; both ``x, y`` and the
    aliases ``y1, y2`` are accepted.  g1 may additionally use the inward
    normal components ``nu1, nu2``.
    """
    g0f = compile_expression(shape.g0, ("x", "y", "y1", "y2"))
    g1f = compile_expression(shape.g1, ("x", "y", "y1", "y2", "nu1", "nu2"))
    x, y = quad.points[:, 0], quad.points[:, 1]
    n1, n2 = quad.normals[:, 0], quad.normals[:, 1]
    g0 = np.broadcast_to(np.asarray(g0f(x, y, x, y), dtype=float), x.shape).copy()
    g1 = np.broadcast_to(np.asarray(g1f(x, y, x, y, n1, n2), dtype=float), x.shape).copy()
    return g0, g1
