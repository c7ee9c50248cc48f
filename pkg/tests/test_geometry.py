import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vlinetomo.errors import DomainError
from vlinetomo.geometry import (LineParams, chord_exit_distance, make_broken_ray, normalize_angle,
                                second_leg_exit, second_leg_line)

betas = st.floats(0.0, 2 * math.pi, allow_nan=False)
thetas = st.floats(0.01, 0.5 * math.pi - 0.01)
fracs = st.floats(0.0, 1.0)


def test_vertex_at_center():
    ray = make_broken_ray(0.0, 1.0, 1.0, math.pi / 3)
    np.testing.assert_allclose(ray.base, [1, 0], atol=1e-15)
    np.testing.assert_allclose(ray.u, [-1, 0], atol=1e-15)
    np.testing.assert_allclose(ray.vertex, [0, 0], atol=1e-15)
    np.testing.assert_allclose(ray.v, [-0.5, -math.sqrt(3) / 2], atol=1e-15)
    assert ray.second_leg_exit == pytest.approx(1.0, abs=1e-15)


def test_zero_first_leg():
    ray = make_broken_ray(math.pi / 2, 0.0, 1.0, math.pi / 3)
    np.testing.assert_allclose(ray.base, [0, 1], atol=1e-15)
    np.testing.assert_allclose(ray.vertex, [0, 1], atol=1e-15)
    np.testing.assert_allclose(ray.u, [0, -1], atol=1e-15)
    np.testing.assert_allclose(ray.v, [math.sqrt(3) / 2, -0.5], atol=1e-15)
    # chord from a boundary point at angle theta to the inward normal: 2R cos(theta)
    assert ray.second_leg_exit == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("bad", [dict(d=-0.1), dict(d=2.1), dict(theta=0.0), dict(theta=math.pi / 2),
                                 dict(R=0.0)])
def test_domain_errors_name_parameter(bad):
    args = dict(beta=0.3, d=0.5, R=1.0, theta=0.4)
    args.update(bad)
    name = next(iter(bad))
    with pytest.raises(DomainError, match=name):
        make_broken_ray(**args)


@settings(max_examples=200, deadline=None)
@given(betas, fracs, thetas)
def test_broken_ray_invariants(beta, frac, theta):
    R = 1.7
    ray = make_broken_ray(beta, 2 * R * frac, R, theta)
    assert abs(np.linalg.norm(ray.u) - 1) < 1e-12
    assert abs(np.linalg.norm(ray.v) - 1) < 1e-12
    # v is u turned by theta
    assert abs(ray.u @ ray.v - math.cos(theta)) < 1e-12
    assert abs(ray.u[0] * ray.v[1] - ray.u[1] * ray.v[0] - math.sin(theta)) < 1e-12
    assert abs(np.linalg.norm(ray.base) - R) < 1e-12
    assert np.linalg.norm(ray.vertex) <= R + 1e-12
    assert ray.second_leg_exit >= 0
    assert abs(np.linalg.norm(ray.vertex + ray.second_leg_exit * ray.v) - R) < 1e-9


@settings(max_examples=100, deadline=None)
@given(betas, fracs, thetas)
def test_periodic_in_beta(beta, frac, theta):
    a = make_broken_ray(beta, 2 * frac, 1.0, theta)
    b = make_broken_ray(beta + 2 * math.pi, 2 * frac, 1.0, theta)
    for name in ("base", "u", "v", "vertex"):
        np.testing.assert_allclose(getattr(a, name), getattr(b, name), atol=1e-12)
    assert abs(a.second_leg_exit - b.second_leg_exit) < 1e-12


@settings(max_examples=100, deadline=None)
@given(betas, betas, fracs, thetas)
def test_rotation_equivariance(beta, gamma, frac, theta):
    c, s = math.cos(gamma), math.sin(gamma)
    rot = np.array([[c, -s], [s, c]])
    a = make_broken_ray(beta, 2 * frac, 1.0, theta)
    b = make_broken_ray(beta + gamma, 2 * frac, 1.0, theta)
    for name in ("base", "u", "v", "vertex"):
        np.testing.assert_allclose(rot @ getattr(a, name), getattr(b, name), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(betas, fracs, thetas)
def test_opposite_first_legs_share_a_diameter(beta, frac, theta):
    a = make_broken_ray(beta, 2 * frac, 1.0, theta)
    b = make_broken_ray(beta + math.pi, 2 - 2 * frac, 1.0, theta)
    # both first legs lie on the line through the origin along u
    for pt in (a.base, a.vertex, b.base, b.vertex):
        assert abs(pt[0] * a.u[1] - pt[1] * a.u[0]) < 1e-12
    np.testing.assert_allclose(a.vertex, b.vertex, atol=1e-12)


def test_second_leg_line_examples():
    assert second_leg_line(1.234, 1.0, 1.0, 0.7).p == 0.0
    line = second_leg_line(0.0, 0.0, 1.0, math.pi / 6)
    assert line.psi == pytest.approx(math.pi / 6 + math.pi / 2, abs=1e-15)
    assert line.p == pytest.approx(-0.5, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(betas, fracs, thetas)
def test_second_leg_line_is_the_point_line_distance(beta, frac, theta):
    R = 1.3
    ray = make_broken_ray(beta, 2 * R * frac, R, theta)
    line = second_leg_line(beta, 2 * R * frac, R, theta)
    # distance from origin to the line through the vertex along v, signed by the w side
    dist = abs(ray.vertex[0] * ray.v[1] - ray.vertex[1] * ray.v[0])
    assert abs(abs(line.p) - dist) < 1e-12
    assert abs(ray.vertex @ line.w - line.p) < 1e-12
    np.testing.assert_allclose(line.w_perp, ray.v, atol=1e-12)
    exit_pt = ray.vertex + ray.second_leg_exit * ray.v
    assert abs(exit_pt @ line.w - line.p) < 1e-12


def test_line_params_frame():
    line = LineParams(0.83, 0.1)
    assert abs(line.w @ line.w_perp) < 1e-16
    assert abs(np.linalg.norm(line.w) - 1) < 1e-16


def test_chord_exit_examples():
    for ang in np.linspace(0, 2 * math.pi, 7):
        assert chord_exit_distance([0, 0], [math.cos(ang), math.sin(ang)], 1.0) == pytest.approx(1.0)
    assert chord_exit_distance([1, 0], [-1, 0], 1.0) == pytest.approx(2.0)
    assert chord_exit_distance([0, 1], [math.sqrt(3) / 2, -0.5], 1.0) == pytest.approx(1.0, abs=1e-15)
    assert chord_exit_distance([1, 0], [1, 0], 1.0) == 0.0
    with pytest.raises(DomainError):
        chord_exit_distance([1.1, 0], [1, 0], 1.0)


@settings(max_examples=100, deadline=None)
@given(betas, fracs, thetas)
def test_vectorized_exit_matches_scalar(beta, frac, theta):
    ray = make_broken_ray(beta, 2 * frac, 1.0, theta)
    assert abs(float(second_leg_exit(beta, 2 * frac, 1.0, theta)) - ray.second_leg_exit) < 1e-12


def test_normalize_angle_tie_break():
    assert normalize_angle(2 * math.pi) == 0.0
    assert normalize_angle(-1e-300) == 0.0
    assert 0 <= normalize_angle(-0.5) < 2 * math.pi
