import numpy as np
import pytest
from numpy.testing import assert_allclose

from membrane_forge.curves import ParticleShape, discretize_shape
from membrane_forge.errors import DegenerateJacobian, SingularMatrix
from membrane_forge.geometry import Box, Configuration
from membrane_forge.validation import (
    Diffeo,
    flow_map,
    matrix_identity_residuals,
    radial_reference_energy,
    transformed_energy,
)

BOX = Box(-10.0, 10.0, -10.0, 10.0)
CIRCLE = ParticleShape("circle", radius=1.0, g0="0", g1="1")


# -- matrix-calculus identities ---------------------------------------------

def test_matrix_identities_smooth_family():
    M = lambda t: np.array([[2.0 + t, np.sin(t)], [t**2, 1.0 - 0.5 * t]])
    r1, r2, r3 = matrix_identity_residuals(M, 0.3)
    assert r1 < 1e-8
    assert r2 < 1e-8
    assert r3 < 1e-10


def test_matrix_identities_reject_singular():
    with pytest.raises(SingularMatrix):
        matrix_identity_residuals(lambda t: np.array([[t, 0.0], [0.0, 0.0]]), 1.0)


# -- change-of-variables identity -------------------------------------------

def quartic_eval(pts):
    x, y = pts[:, 0], pts[:, 1]
    u = x**2 * y**2
    grad = np.column_stack([2 * x * y**2, 2 * x**2 * y])
    hess = np.empty((len(x), 2, 2))
    hess[:, 0, 0] = 2 * y**2
    hess[:, 1, 1] = 2 * x**2
    hess[:, 0, 1] = hess[:, 1, 0] = 4 * x * y
    return u, grad, hess


@pytest.fixture(scope="module")
def box_quadrature():
    # tensor Gauss rule on [-1, 1]^2, exact for the test polynomials
    nodes, weights = np.polynomial.legendre.leggauss(12)
    X, Y = np.meshgrid(nodes, nodes)
    W = np.outer(weights, weights)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


def plain_energy(pts, w, kappa, sigma):
    u, grad, hess = quartic_eval(pts)
    lap = hess[:, 0, 0] + hess[:, 1, 1]
    return 0.5 * float(w @ (kappa * lap**2 + sigma * (grad**2).sum(axis=1)))


def test_identity_map_reproduces_energy(box_quadrature):
    pts, w = box_quadrature
    plain = plain_energy(pts, w, 1.0, 0.5)
    assert transformed_energy(quartic_eval, Diffeo.identity(), pts, w, 1.0, 0.5) == (
        pytest.approx(plain, rel=1e-12)
    )


def test_rotation_preserves_energy(box_quadrature):
    # the energy density is built from Lap u and |grad u|, both rotation
    # invariant, so a rotation changes nothing
    pts, w = box_quadrature
    alpha = 0.8
    R = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]])
    plain = plain_energy(pts, w, 1.0, 0.5)
    assert transformed_energy(quartic_eval, Diffeo.linear(R), pts, w, 1.0, 0.5) == (
        pytest.approx(plain, rel=1e-12)
    )


def test_scaling_transforms_bending_energy(box_quadrature):
    # under x -> s x the pure bending energy of u(x/s) picks up s^{-2}:
    # the transformed integral must equal that of the composed function
    pts, w = box_quadrature
    s = 1.3
    value = transformed_energy(quartic_eval, Diffeo.linear(s * np.eye(2)), pts, w, 1.0)

    def composed(q):
        u, grad, hess = quartic_eval(q / s)
        return u, grad / s, hess / s**2

    # integral of the composed function over the *image* domain [-s, s]^2
    spts, sw = pts * s, w * s**2
    u, grad, hess = composed(spts)
    lap = hess[:, 0, 0] + hess[:, 1, 1]
    direct = 0.5 * float(sw @ lap**2)
    assert value == pytest.approx(direct, rel=1e-10)


def test_degenerate_jacobian_detected(box_quadrature):
    pts, w = box_quadrature
    with pytest.raises(DegenerateJacobian):
        transformed_energy(
            quartic_eval, Diffeo.linear(np.diag([1.0, -1.0])), pts, w, 1.0
        )


# -- transport of particles -------------------------------------------------

def test_flow_map_pure_translation():
    config = Configuration.from_array([[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    direction = np.array([[1.0, 0.5, 0.0], [0.0, 0.0, 0.0]])
    quad = discretize_shape(CIRCLE, 64)
    x0 = quad.points + np.array([-3.0, 0.0])
    result = flow_map(config, [CIRCLE, CIRCLE], BOX, direction, x0, steps=64,
                      curve_particle=0)
    assert_allclose(result.points, x0 + [1.0, 0.5], atol=1e-6)
    assert result.trace_residual < 1e-6


def test_flow_map_rotation():
    config = Configuration.from_array([[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    direction = np.array([[0.0, 0.0, np.pi / 2], [0.0, 0.0, 0.0]])
    quad = discretize_shape(CIRCLE, 64)
    x0 = quad.points + np.array([-3.0, 0.0])
    result = flow_map(config, [CIRCLE, CIRCLE], BOX, direction, x0, steps=128,
                      curve_particle=0)
    # a circle is rotation invariant: the flowed samples still lie on it
    assert result.trace_residual < 1e-6
    radii = np.linalg.norm(result.points - [-3.0, 0.0], axis=1)
    assert_allclose(radii, 1.0, atol=1e-6)


def test_flow_map_leaves_far_points_alone():
    config = Configuration.from_array([[-3.0, 0.0, 0.0]])
    direction = np.array([[1.0, 0.0, 0.0]])
    x0 = np.array([[8.0, 8.0]])
    result = flow_map(config, [CIRCLE], BOX, direction, x0, steps=16)
    assert_allclose(result.points, x0, atol=1e-14)


def test_flow_map_step_convergence():
    # classical RK4: quadrupling the step count cuts the error by ~256;
    # compare both against a heavily resolved reference
    config = Configuration.from_array([[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    direction = np.array([[1.0, 0.8, 0.6], [0.0, 0.0, 0.0]])
    x0 = np.array([[-2.3, 0.4]])
    ref = flow_map(config, [CIRCLE, CIRCLE], BOX, direction, x0, steps=512).points
    e_coarse = np.linalg.norm(
        flow_map(config, [CIRCLE, CIRCLE], BOX, direction, x0, steps=8).points - ref
    )
    e_fine = np.linalg.norm(
        flow_map(config, [CIRCLE, CIRCLE], BOX, direction, x0, steps=32).points - ref
    )
    assert e_fine < e_coarse / 100


# -- radial reference -------------------------------------------------------

def test_radial_reference_closed_form():
    # clamped annulus 1 < r < 9 with unit inward slope at r = 1
    assert radial_reference_energy(9.0) == pytest.approx(np.pi / 40, rel=1e-12)


def test_radial_reference_monotone_in_radius():
    Rs = np.array([5.0, 10.0, 20.0, 40.0])
    Es = np.array([radial_reference_energy(R) for R in Rs])
    assert (np.diff(Es) < 0).all()
    assert (Es > 0).all()


def test_radial_reference_scales_with_kappa():
    assert radial_reference_energy(10.0, kappa=2.5) == pytest.approx(
        2.5 * radial_reference_energy(10.0), rel=1e-12
    )
