import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from membrane_forge.geometry import (
    Box,
    Configuration,
    RigidPose,
    configuration_clearance,
    rigid_map,
    rotation_matrix,
)
from membrane_forge.curves import ParticleShape


def test_rotation_matrix_orthogonal():
    R = rotation_matrix(0.37)
    assert_allclose(R @ R.T, np.eye(2), atol=1e-15)
    assert_allclose(np.linalg.det(R), 1.0, atol=1e-15)


def test_pose_angle_wrapping():
    pose = RigidPose(0.0, 0.0, 2 * np.pi + 0.2)
    assert pose.alpha3 == pytest.approx(0.2)
    assert RigidPose(0, 0, -np.pi).alpha3 == pytest.approx(np.pi)


@given(
    st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10),
    st.floats(-2, 2), st.floats(-2, 2),
)
def test_rigid_map_roundtrip(x1, x2, alpha, y1, y2):
    pose = RigidPose(x1, x2, alpha)
    y = np.array([[y1, y2]])
    back = rigid_map(pose, rigid_map(pose, y), inverse=True)
    assert_allclose(back, y, atol=1e-12)


def test_rigid_map_is_rotation_plus_shift():
    pose = RigidPose(1.0, -2.0, np.pi / 2)
    out = rigid_map(pose, np.array([[1.0, 0.0]]))
    assert_allclose(out, [[1.0, -1.0]], atol=1e-14)


def test_configuration_array_roundtrip():
    p = np.array([[0.5, -1.0, 0.1], [2.0, 3.0, -0.4]])
    config = Configuration.from_array(p)
    assert_allclose(config.as_array(), p)
    assert len(config) == 2
    shifted = config.shifted(np.full((2, 3), 0.25))
    assert_allclose(shifted.as_array(), p + 0.25)


def test_box_contains_and_boundary_distance():
    box = Box(-1.0, 1.0, -2.0, 2.0)
    assert box.area == pytest.approx(8.0)
    inside = np.array([[0.0, 0.0], [0.9, -1.9]])
    assert box.contains(inside).all()
    assert not box.contains(np.array([[1.1, 0.0]]))[0]
    d = box.boundary_distance(np.array([[0.0, 0.0], [0.5, 0.0]]))
    assert_allclose(d, [1.0, 0.5])


def test_clearance_two_circles():
    box = Box(-10, 10, -10, 10)
    circ = ParticleShape("circle", radius=1.0, g0="0", g1="1")
    config = Configuration.from_array([[-2.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    clear = configuration_clearance(config, [circ, circ], box)
    # curve-to-curve gap 4 - 2 = 2 along the center line
    assert_allclose(clear, [2.0, 2.0], rtol=1e-3)


def test_clearance_detects_overlap():
    box = Box(-10, 10, -10, 10)
    circ = ParticleShape("circle", radius=1.0, g0="0", g1="1")
    config = Configuration.from_array([[-0.8, 0.0, 0.0], [0.8, 0.0, 0.0]])
    clear = configuration_clearance(config, [circ, circ], box)
    assert clear.min() < 0.0


def test_clearance_box_wall():
    box = Box(-10, 10, -10, 10)
    circ = ParticleShape("circle", radius=1.0, g0="0", g1="1")
    config = Configuration.from_array([[9.5, 0.0, 0.0]])
    clear = configuration_clearance(config, [circ], box)
    assert clear[0] == pytest.approx(-0.5, abs=1e-3)
