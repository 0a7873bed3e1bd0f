import numpy as np
import pytest
from numpy.testing import assert_allclose

from membrane_forge.curves import ParticleShape
from membrane_forge.fem.assembly import assemble_bending
from membrane_forge.fem.cutquad import cut_quadrature
from membrane_forge.fem.space import build_space, hermite_1d
from membrane_forge.fem.vtk import write_vtk
from membrane_forge.geometry import Box, Configuration


@pytest.fixture(scope="module")
def space():
    return build_space(Box(-2.0, 2.0, -2.0, 2.0), 16, 16)


def test_hermite_nodal_values():
    h = 0.5
    # value functions are 1 at their node, 0 at the other; slope functions
    # have unit derivative at their node
    t = np.array([0.0, 1.0])
    vals = hermite_1d(t, h, 0)  # (npts, 4): [v0, s0, v1, s1]
    assert_allclose(vals[0], [1.0, 0.0, 0.0, 0.0], atol=1e-14)
    assert_allclose(vals[1], [0.0, 0.0, 1.0, 0.0], atol=1e-14)
    ders = hermite_1d(t, h, 1)
    assert_allclose(ders[0], [0.0, 1.0, 0.0, 0.0], atol=1e-14)
    assert_allclose(ders[1], [0.0, 0.0, 0.0, 1.0], atol=1e-14)


def test_space_dof_count(space):
    assert space.total_dofs == 4 * 17 * 17


def test_interpolation_reproduces_bicubics(space):
    # the tensor Hermite space contains Q3, so interpolation of a bicubic
    # polynomial is exact including first and second derivatives
    f = lambda x, y: x**3 * y**2 - 2 * x * y**3 + x**2 + 3 * y + 1
    fx = lambda x, y: 3 * x**2 * y**2 - 2 * y**3 + 2 * x
    fy = lambda x, y: 2 * x**3 * y - 6 * x * y**2 + 3
    fxy = lambda x, y: 6 * x**2 * y - 6 * y**2
    fld = space.interpolate(f, fx, fy, fxy)

    rng = np.random.default_rng(7)
    pts = rng.uniform(-1.9, 1.9, size=(50, 2))
    u, grad, hess = fld.evaluate(pts)
    x, y = pts[:, 0], pts[:, 1]
    assert_allclose(u, f(x, y), atol=1e-10)
    assert_allclose(grad[:, 0], fx(x, y), atol=1e-9)
    assert_allclose(grad[:, 1], fy(x, y), atol=1e-9)
    assert_allclose(hess[:, 0, 0], 6 * x * y**2 + 2, atol=1e-8)
    assert_allclose(hess[:, 1, 1], 2 * x**3 - 12 * x * y, atol=1e-8)
    assert_allclose(hess[:, 0, 1], fxy(x, y), atol=1e-8)
    assert_allclose(hess[:, 0, 1], hess[:, 1, 0], atol=1e-12)


def test_bending_energy_of_quadratic(space):
    # u = x^2 + y^2 has Lap u = 4, grad u = (2x, 2y); both integrals are exact
    fld = space.interpolate(
        lambda x, y: x**2 + y**2,
        lambda x, y: 2 * x + 0 * y,
        lambda x, y: 2 * y + 0 * x,
        lambda x, y: 0 * x,
    )
    kappa, sigma = 1.3, 0.7
    S = assemble_bending(space, kappa, sigma)
    c = fld.coefficients
    area = space.box.area
    # int |grad|^2 = int 4(x^2+y^2) dA = 8 * int x^2 dA = 8 * (16/3) * 4
    exact = kappa * 16.0 * area + sigma * 512.0 / 3.0
    assert c @ (S @ c) == pytest.approx(exact, rel=1e-10)


def test_bending_matrix_symmetric_psd(space):
    S = assemble_bending(space, 1.0, 0.5)
    assert abs(S - S.T).max() < 1e-10
    rng = np.random.default_rng(3)
    v = rng.standard_normal(space.total_dofs)
    assert v @ (S @ v) >= -1e-10


def test_boundary_dofs_on_perimeter(space):
    dofs = space.boundary_dofs()
    # 3 DOFs clamped per boundary node times the node count of the perimeter
    n_perimeter = 4 * 16
    assert len(dofs) == len(set(dofs.tolist()))
    assert len(dofs) >= n_perimeter


def test_cut_quadrature_area():
    # kept quadrature weight should approximate |box| - |disk|
    box = Box(-2.0, 2.0, -2.0, 2.0)
    space = build_space(box, 32, 32)
    shape = ParticleShape("circle", radius=1.0)
    config = Configuration.from_array([[0.1, -0.2, 0.0]])
    quad = cut_quadrature(space, config, [shape], subdiv=8)
    assert quad.weights.sum() == pytest.approx(box.area - np.pi, rel=2e-3)


def test_cut_quadrature_smooth_in_position():
    # fractional subcell coverage: kept area varies smoothly with the center,
    # so nearby configurations give nearby totals
    box = Box(-2.0, 2.0, -2.0, 2.0)
    space = build_space(box, 32, 32)
    shape = ParticleShape("circle", radius=1.0)
    totals = []
    for dx in np.linspace(0.0, space.hx, 9):
        config = Configuration.from_array([[dx, 0.0, 0.0]])
        totals.append(cut_quadrature(space, config, [shape], subdiv=8).weights.sum())
    totals = np.array(totals)
    assert np.abs(np.diff(totals)).max() < 1e-3 * box.area


def test_cut_points_outside_particle():
    box = Box(-2.0, 2.0, -2.0, 2.0)
    space = build_space(box, 32, 32)
    shape = ParticleShape("circle", radius=1.0)
    config = Configuration.from_array([[0.0, 0.0, 0.0]])
    quad = cut_quadrature(space, config, [shape], subdiv=8)
    r = np.linalg.norm(quad.cut_points, axis=1)
    # only within half a subcell of the curve may interior points carry weight
    sub = min(space.hx, space.hy) / 8
    assert r.min() > 1.0 - sub


def test_vtk_output(tmp_path, space):
    fld = space.interpolate(lambda x, y: x * y)
    path = tmp_path / "field.vtk"
    write_vtk(fld, path)
    text = path.read_text()
    assert text.startswith("# vtk DataFile")
    assert "POINTS" in text
