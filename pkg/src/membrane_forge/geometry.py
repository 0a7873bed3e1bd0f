"""Rigid particle poses, configurations, and feasibility inside the box."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MismatchedLengths


def _wrap_angle(alpha: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.fmod(alpha, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def rotation_matrix(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RigidPose:
    """In-plane translation (x1, x2) and rotation alpha3 of one particle."""

    x1: float = 0.0
    x2: float = 0.0
    alpha3: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha3", _wrap_angle(self.alpha3))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x1, self.x2])

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.alpha3])


@dataclass(frozen=True)
class Configuration:
    """Poses of the N movable particles; the outer boundary pose is implicit."""

    poses: tuple[RigidPose, ...] = ()

    @staticmethod
    def from_array(p: np.ndarray) -> "Configuration":
        p = np.asarray(p, dtype=float).reshape(-1, 3)
        return Configuration(tuple(RigidPose(*row) for row in p))

    def as_array(self) -> np.ndarray:
        if not self.poses:
            return np.zeros((0, 3))
        return np.stack([pose.as_array() for pose in self.poses])

    def __len__(self) -> int:
        return len(self.poses)

    def shifted(self, q: np.ndarray) -> "Configuration":
        return Configuration.from_array(self.as_array() + np.asarray(q, dtype=float).reshape(-1, 3))


@dataclass(frozen=True)
class Box:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("box must have positive extent")

    @property
    def widths(self) -> tuple[float, float]:
        return (self.xmax - self.xmin, self.ymax - self.ymin)

    @property
    def area(self) -> float:
        w, h = self.widths
        return w * h

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return (
            (pts[:, 0] >= self.xmin)
            & (pts[:, 0] <= self.xmax)
            & (pts[:, 1] >= self.ymin)
            & (pts[:, 1] <= self.ymax)
        )

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        """Signed distance to the boundary; positive inside."""
        pts = np.atleast_2d(pts)
        return np.minimum.reduce(
            [
                pts[:, 0] - self.xmin,
                self.xmax - pts[:, 0],
                pts[:, 1] - self.ymin,
                self.ymax - pts[:, 1],
            ]
        )


def rigid_map(pose: RigidPose, y: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Apply phi(p; y) = R(alpha3) y + x, or its inverse."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    pts = np.atleast_2d(y)
    t = pose.center
    if inverse:
        out = (pts - t) @ rotation_matrix(-pose.alpha3).T
    else:
        out = pts @ rotation_matrix(pose.alpha3).T + t
    return out[0] if single else out


def _curve_samples(shape, pose: RigidPose, n: int) -> np.ndarray:
    """Dense polyline approximation of the particle curve in world coordinates."""
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    r = shape.radius_profile(theta)
    ref = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return rigid_map(pose, ref)


def configuration_clearance(
    config: Configuration, shapes, box: Box, samples: int = 512
) -> np.ndarray:
    """Per-particle clearance: min distance of the particle curve to every other
    particle curve and to the box boundary.

    Positive for all particles iff the configuration is feasible (up to sampling
    resolution). A negative value signals overlap, estimated from bounding
    circles so that flow stepping can reject infeasible steps.
    """
    if len(config) != len(shapes):
        raise MismatchedLengths(
            f"{len(config)} poses vs {len(shapes)} shapes"
        )
    n = len(config)
    if n == 0:
        return np.zeros(0)
    curves = [_curve_samples(shapes[i], config.poses[i], samples) for i in range(n)]
    clearance = np.full(n, np.inf)
    for i in range(n):
        # Box boundary distance is signed already (negative outside).
        clearance[i] = min(clearance[i], float(box.boundary_distance(curves[i]).min()))
        for j in range(n):
            if j == i:
                continue
            dist = np.sqrt(
                ((curves[i][:, None, :] - curves[j][None, :, :]) ** 2).sum(-1)
            ).min(axis=1)
            # Samples of curve i caught inside particle j flip the sign so
            # flow stepping can detect penetration depth.
            ref_in_j = rigid_map(config.poses[j], curves[i], inverse=True)
            inside = shapes[j].contains(ref_in_j)
            if inside.any():
                d_curve = -float(dist[inside].max())
            else:
                d_curve = float(dist.min())
            clearance[i] = min(clearance[i], d_curve)
    return clearance
