"""Independent cross-checks for the derivative formula and its ingredients.

Nothing in this module reuses the shape-derivative code path it is checking:
finite differences probe the energy directly, the particle transport is
integrated as an ODE, the change-of-variables identity is evaluated from
analytic Jacobians, and the matrix-calculus identities are differenced
numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateJacobian, SingularMatrix
from .geometry import Box, Configuration, rigid_map
from .solve import ProblemSpec, minimize_membrane
from .vectorfield import eval_velocity, time_velocity

__all__ = [
    "fd_derivative",
    "FlowMapResult",
    "flow_map",
    "Diffeo",
    "transformed_energy",
    "matrix_identity_residuals",
    "radial_reference_energy",
    "ValidationReport",
    "run_validation",
]


# ---------------------------------------------------------------------------
# finite-difference energy derivative

def fd_derivative(
    spec: ProblemSpec,
    config: Configuration,
    direction: np.ndarray,
    delta: float = 1e-3,
) -> float:
    """Central difference (J(p + d e) - J(p - d e)) / (2 d) with fresh solves."""
    direction = np.asarray(direction, dtype=float).reshape(len(config), 3)
    p = config.as_array()
    plus = minimize_membrane(spec, Configuration.from_array(p + delta * direction))
    minus = minimize_membrane(spec, Configuration.from_array(p - delta * direction))
    return (plus.energy - minus.energy) / (2.0 * delta)


# ---------------------------------------------------------------------------
# particle transport as an ODE

@dataclass(frozen=True)
class FlowMapResult:
    """Outcome of integrating points along the transport field."""

    points: np.ndarray          #: flowed positions, shape (n, 2)
    steps: int                  #: RK4 steps used
    trace_residual: float       #: max distance of flowed curve samples to the
                                #: target curve (nan if no curve samples given)


def flow_map(
    config: Configuration,
    shapes: Sequence,
    box: Box,
    direction: np.ndarray,
    x: np.ndarray,
    steps: int = 64,
    curve_particle: int | None = None,
) -> FlowMapResult:
    """Integrate dx/dt = V(t, x) from t = 0 to 1 with classical RK4, where
    V(t, .) is the transport field rebuilt at the shifted configuration
    p + t * direction.

    If ``curve_particle`` is given, ``x`` is interpreted as samples of that
    particle's curve at the start configuration and the result reports how far
    the flowed samples land from the same curve at the end configuration
    (the transport is supposed to carry particle boundaries onto particle
    boundaries exactly).
    """
    direction = np.asarray(direction, dtype=float).reshape(len(config), 3)
    pts = np.atleast_2d(np.asarray(x, dtype=float)).copy()
    h = 1.0 / steps
    for k in range(steps):
        t = k * h
        f0 = time_velocity(config, shapes, direction, box, t)
        fh = time_velocity(config, shapes, direction, box, t + 0.5 * h)
        f1 = time_velocity(config, shapes, direction, box, t + h)
        k1 = eval_velocity(f0, pts)[0]
        k2 = eval_velocity(fh, pts + 0.5 * h * k1)[0]
        k3 = eval_velocity(fh, pts + 0.5 * h * k2)[0]
        k4 = eval_velocity(f1, pts + h * k3)[0]
        pts += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    residual = float("nan")
    if curve_particle is not None:
        i = curve_particle
        shape = shapes[i]
        pose = config.shifted(direction).poses[i]
        local = rigid_map(pose, pts, inverse=True)
        r = np.linalg.norm(local, axis=1)
        theta = np.arctan2(local[:, 1], local[:, 0])
        target = np.array([shape.radius_profile(th) for th in theta])
        residual = float(np.abs(r - target).max())
    return FlowMapResult(pts, steps, residual)


# ---------------------------------------------------------------------------
# change-of-variables identity for the energy

@dataclass(frozen=True)
class Diffeo:
    """Analytic diffeomorphism with first and second derivatives.

    ``jacobian`` returns DX with shape (n, 2, 2); ``second`` returns D2X with
    shape (n, 2, 2, 2) indexed [point, component, deriv1, deriv2].
    """

    map: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    second: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def identity() -> "Diffeo":
        return Diffeo(
            map=lambda x: x.copy(),
            jacobian=lambda x: np.broadcast_to(np.eye(2), (x.shape[0], 2, 2)).copy(),
            second=lambda x: np.zeros((x.shape[0], 2, 2, 2)),
        )

    @staticmethod
    def linear(M: np.ndarray) -> "Diffeo":
        M = np.asarray(M, dtype=float)
        return Diffeo(
            map=lambda x: x @ M.T,
            jacobian=lambda x: np.broadcast_to(M, (x.shape[0], 2, 2)).copy(),
            second=lambda x: np.zeros((x.shape[0], 2, 2, 2)),
        )


def transformed_energy(
    u_eval: Callable[[np.ndarray], tuple],
    diffeo: Diffeo,
    points: np.ndarray,
    weights: np.ndarray,
    kappa: float,
    sigma: float = 0.0,
) -> float:
    """Energy of u composed with the inverse map, written as an integral over
    the *original* domain:

        integral of  kappa * div(A grad u)^2 / |det DX|  +  sigma * |grad u|_A^2

    with A = |det DX| DX^{-1} DX^{-T}.  The divergence term expands A's spatial
    derivatives analytically from D2X via d(det M) = det M tr(M^{-1} dM) and
    d(M^{-1}) = -M^{-1} dM M^{-1}.  Returns the value *without* the leading
    1/2 factor applied to the bending part, mirroring the plain energy
    convention 1/2 * (kappa-part + sigma-part) used elsewhere:
    the function returns 1/2 of the displayed integral.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    u, grad, hess = u_eval(points)
    DX = diffeo.jacobian(points)
    D2X = diffeo.second(points)
    det = np.linalg.det(DX)
    if np.any(det <= 0.0):
        raise DegenerateJacobian(f"det DX <= 0 at a quadrature point (min {det.min():.4g})")
    Minv = np.linalg.inv(DX)
    A = det[:, None, None] * np.einsum("nba,nca->nbc", Minv, Minv)

    # dA[:, c] = derivative of A along coordinate c; the derivative of DX
    # along c is the slice D2X[:, :, :, c].
    dA = np.zeros((points.shape[0], 2, 2, 2))
    for c in range(2):
        dDX = D2X[:, :, :, c]
        ddet = det * np.einsum("nab,nba->n", Minv, dDX)
        dMinv = -np.einsum("nab,nbc,ncd->nad", Minv, dDX, Minv)
        dA[:, c] = (
            ddet[:, None, None] * np.einsum("nba,nca->nbc", Minv, Minv)
            + det[:, None, None] * np.einsum("nba,nca->nbc", dMinv, Minv)
            + det[:, None, None] * np.einsum("nba,nca->nbc", Minv, dMinv)
        )

    # div(A grad u) = sum_a d_a (A_ab d_b u) = (d_a A_ab) d_b u + A_ab d_a d_b u
    div_Agrad = np.zeros(points.shape[0])
    for a in range(2):
        for b in range(2):
            div_Agrad += dA[:, a, a, b] * grad[:, b] + A[:, a, b] * hess[:, a, b]

    bending = kappa * div_Agrad**2 / det
    tension = sigma * np.einsum("na,nab,nb->n", grad, A, grad) if sigma != 0.0 else 0.0
    return 0.5 * float(weights @ (bending + tension))


# ---------------------------------------------------------------------------
# matrix-calculus identities

def matrix_identity_residuals(
    M: Callable[[float], np.ndarray], t: float, delta: float = 1e-5
) -> tuple[float, float, float]:
    """Residuals of d(det M) = det M tr(M^{-1} M'), d(M^{-1}) = -M^{-1}M'M^{-1}
    and d(tr M) = tr M', with time derivatives taken by central differences.
    """
    M0 = np.asarray(M(t), dtype=float)
    Mp = np.asarray(M(t + delta), dtype=float)
    Mm = np.asarray(M(t - delta), dtype=float)
    if abs(np.linalg.det(M0)) < 1e-14:
        raise SingularMatrix("matrix family is singular at the evaluation point")
    Mdot = (Mp - Mm) / (2.0 * delta)
    Minv = np.linalg.inv(M0)
    r1 = abs(
        (np.linalg.det(Mp) - np.linalg.det(Mm)) / (2.0 * delta)
        - np.linalg.det(M0) * np.trace(Minv @ Mdot)
    )
    r2 = float(
        np.linalg.norm(
            (np.linalg.inv(Mp) - np.linalg.inv(Mm)) / (2.0 * delta) + Minv @ Mdot @ Minv
        )
    )
    r3 = abs((np.trace(Mp) - np.trace(Mm)) / (2.0 * delta) - np.trace(Mdot))
    return r1, r2, r3


# ---------------------------------------------------------------------------
# radial reference solution

def radial_reference_energy(R: float, kappa: float = 1.0) -> float:
    """Bending energy of the radially symmetric membrane a + b ln r + c r^2 +
    d r^2 ln r on the annulus 1 <= r <= R, clamped at the outer rim
    (u(R) = u'(R) = 0), with unit inward slope at the inner rim (u'(1) = -1)
    and free height.  Minimized in closed form over the one remaining
    parameter after eliminating the constraints.

    The energy is pi * kappa * integral of (u'' + u'/r)^2 r dr; with
    Lap u = 4c + 4d (ln r + 1) the integrals reduce to moments of ln r.
    """
    lnR = np.log(R)
    # moments I_k = integral_1^R (ln r)^k r dr
    i0 = (R**2 - 1.0) / 2.0
    i1 = (R**2 * (2.0 * lnR - 1.0) + 1.0) / 4.0
    i2 = (R**2 * (2.0 * lnR**2 - 2.0 * lnR + 1.0) - 1.0) / 4.0
    # constraints: u'(1) = b + 2c + d = -1;  u'(R) = b/R + 2cR + d R(2 ln R + 1) = 0
    # eliminate b = -1 - 2c - d, then solve the second constraint for c(d):
    cc = -2.0 / R + 2.0 * R
    cd = -1.0 / R + 2.0 * R * lnR + R
    c0 = -1.0 / R

    def energy(d: float) -> float:
        c = (-c0 - cd * d) / cc
        # E(c, d) = 16 pi kappa [ (c+d)^2 I0 + 2 d (c+d) I1 + d^2 I2 ]
        return 16.0 * np.pi * kappa * ((c + d) ** 2 * i0 + 2.0 * d * (c + d) * i1 + d**2 * i2)

    # quadratic in d: minimize by golden ratio of three-point parabola fit
    e0, e1, e2 = energy(-1.0), energy(0.0), energy(1.0)
    denom = e0 - 2.0 * e1 + e2
    d_star = 0.0 if denom == 0.0 else 0.5 * (e0 - e2) / denom
    return energy(d_star)


# ---------------------------------------------------------------------------
# aggregate validation suite

@dataclass
class ValidationReport:
    """Named residuals with tolerances; the CLI renders these as a report."""

    rows: list = field(default_factory=list)  # (name, value, tolerance)

    def add(self, name: str, value: float, tol: float):
        self.rows.append((name, float(value), float(tol)))

    @property
    def passed(self) -> bool:
        return all(v <= t for _, v, t in self.rows)


def run_validation(spec: ProblemSpec, config: Configuration, delta: float = 1e-3) -> ValidationReport:
    """Run the independent-oracle suite against one scenario configuration.

    Checks: formula-vs-FD derivative agreement per canonical direction, curve
    transport residuals of the RK4 flow map, the change-of-variables energy
    identity on an analytic field, and the matrix-calculus identities.
    """
    from .curves import discretize_shape
    from .shape_derivative import gradient

    report = ValidationReport()
    solution = minimize_membrane(spec, config)
    grad = gradient(spec, config, solution)
    scale = max(abs(solution.energy), 1e-12)

    for i in range(len(config)):
        for k, label in enumerate(("x1", "x2", "alpha")):
            e = np.zeros((len(config), 3))
            e[i, k] = 1.0
            fd = fd_derivative(spec, config, e, delta)
            err = abs(grad.gradient[i, k] - fd)
            report.add(
                f"derivative_vs_fd[p{i}.{label}]",
                err,
                max(0.05 * abs(fd), 1e-3 * scale),
            )

    q = 0.05 * np.ones((len(config), 3))
    for i, shape in enumerate(spec.shapes):
        samples = rigid_map(config.poses[i], discretize_shape(shape, 64).points)
        result = flow_map(config, spec.shapes, spec.box, q, samples, steps=64, curve_particle=i)
        report.add(f"flow_trace[p{i}]", result.trace_residual, 1e-6)

    rng = np.random.default_rng(7)
    pts = rng.uniform(0.1, 0.9, size=(200, 2))
    w = np.full(200, 1.0 / 200)

    def poly(x):
        u = x[:, 0] ** 2 * x[:, 1]
        g = np.stack([2 * x[:, 0] * x[:, 1], x[:, 0] ** 2], axis=1)
        h = np.zeros((x.shape[0], 2, 2))
        h[:, 0, 0] = 2 * x[:, 1]
        h[:, 0, 1] = h[:, 1, 0] = 2 * x[:, 0]
        return u, g, h

    plain = transformed_energy(poly, Diffeo.identity(), pts, w, kappa=1.0, sigma=0.5)
    scaled = transformed_energy(poly, Diffeo.linear(np.diag([2.0, 1.0])), pts, w, kappa=1.0, sigma=0.5)
    # direct two-sided check of the scaling case: v(z) = u(z1/2, z2) over the
    # image points with transformed weights
    z = pts @ np.diag([2.0, 1.0])
    wz = w * 2.0

    def poly_pulled(x):
        y = x @ np.diag([0.5, 1.0])
        u, g, h = poly(y)
        g = g @ np.diag([0.5, 1.0])
        S = np.diag([0.5, 1.0])
        h = np.einsum("ab,nbc,cd->nad", S, h, S)
        return u, g, h

    _, gz, hz = poly_pulled(z)
    direct = 0.5 * float(
        wz @ ((hz[:, 0, 0] + hz[:, 1, 1]) ** 2 + 0.5 * np.einsum("na,na->n", gz, gz))
    )
    report.add("transformed_energy_identity", abs(scaled - direct), 1e-8 * max(1.0, abs(direct)))
    _, g0, h0 = poly(pts)
    direct_plain = 0.5 * float(
        w @ ((h0[:, 0, 0] + h0[:, 1, 1]) ** 2 + 0.5 * np.einsum("na,na->n", g0, g0))
    )
    report.add("transformed_energy_id_map", abs(plain - direct_plain), 1e-12)

    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    r1, r2, r3 = matrix_identity_residuals(lambda t: np.eye(2) + t * J, 0.0)
    report.add("matrix_identity_det", r1, 1e-8)
    report.add("matrix_identity_inv", r2, 1e-8)
    report.add("matrix_identity_trace", r3, 1e-8)
    return report
