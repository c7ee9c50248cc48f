import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vlinetomo.errors import DomainError
from vlinetomo.fields import (AnalyticScalarField, AnalyticVectorField, BumpTerm, GridScalarField, GridVectorField,
                              ModeTerm, grid_points, PhantomSpec, angular_coefficient, apply_diff_operator, make_phantom,
                              measured_support_radius, mode_profiles, random_phantom, sample_scalar_to_grid,
                              sample_to_grid)


def _bump_scalar(center=(0.1, -0.2), width=0.4, amp=1.3):
    spec = PhantomSpec("mixture", [BumpTerm(center, width, (amp, 0.0))])
    vec = make_phantom(spec)
    return AnalyticScalarField(1.0, terms=vec.terms)


def _pts(seed=0, n=500, r=0.95):
    rng = np.random.default_rng(seed)
    rad = r * np.sqrt(rng.uniform(0, 1, n))
    ang = rng.uniform(0, 2 * np.pi, n)
    return rad * np.cos(ang), rad * np.sin(ang)


def test_grad_of_linear_function():
    phi = AnalyticScalarField(1.0, func=lambda x, y: np.asarray(x, float),
                              grad=lambda x, y: (np.ones_like(x), np.zeros_like(x)))
    x, y = _pts()
    f1, f2 = apply_diff_operator("grad", phi)(x, y)
    assert np.all(f1 == 1) and np.all(f2 == 0)
    g1, g2 = apply_diff_operator("grad_perp", phi)(x, y)
    assert np.all(g1 == 0) and np.all(g2 == 1)


def test_grid_grad_of_linear_function():
    X = sample_scalar_to_grid(AnalyticScalarField(1.0, func=lambda x, y: np.asarray(x, float)), 9, 7)
    g = apply_diff_operator("grad", X)
    np.testing.assert_allclose(g.f1, 1.0, atol=1e-12)
    np.testing.assert_allclose(g.f2, 0.0, atol=1e-12)


def test_operator_identities_analytic():
    phi = _bump_scalar()
    x, y = _pts()
    curl = apply_diff_operator("curl", apply_diff_operator("grad", phi))(x, y)
    div = apply_diff_operator("div", apply_diff_operator("grad_perp", phi))(x, y)
    assert np.max(np.abs(curl)) <= 1e-10
    assert np.max(np.abs(div)) <= 1e-10


@pytest.mark.parametrize("kind", ["potential", "solenoidal", "angular-mode", "mixture"])
def test_operator_identities_random_phantoms(kind):
    fld = random_phantom(np.random.default_rng(7), kind, 3, 0.8)
    x, y = _pts(1)
    if kind == "potential":
        assert np.max(np.abs(apply_diff_operator("curl", fld)(x, y))) <= 1e-10
    if kind == "solenoidal":
        assert np.max(np.abs(apply_diff_operator("div", fld)(x, y))) <= 1e-10


def test_grid_identities_are_second_order():
    phi = _bump_scalar(width=0.7)
    errs = []
    for n in (64, 128):
        g = apply_diff_operator("grad", sample_scalar_to_grid(phi, n, n))
        c = apply_diff_operator("curl", g).values
        errs.append(np.max(np.abs(c[2:-2, 2:-2])))
    # the centered differences commute in the interior, so the identity holds to rounding
    assert max(errs) < 1e-8
    exact = apply_diff_operator("grad", phi)
    gaps = []
    for n in (64, 128):
        g = apply_diff_operator("grad", sample_scalar_to_grid(phi, n, n))
        ref = sample_to_grid(exact, n, n)
        gaps.append(np.max(np.abs(g.values[2:-2, 2:-2] - ref.values[2:-2, 2:-2])))
    assert gaps[0] / gaps[1] > 3.0


def test_potential_phantom_vanishes_outside_bump():
    rho = 0.3
    fld = make_phantom(PhantomSpec("potential", [BumpTerm((0.2, 0.1), rho, 1.0)]))
    ang = np.linspace(0, 2 * np.pi, 100)
    for r in (rho, rho + 1e-9, 0.5):
        f1, f2 = fld(0.2 + r * np.cos(ang), 0.1 + r * np.sin(ang))
        assert np.all(f1 == 0) and np.all(f2 == 0)


def test_n0_mode_is_radial_and_f2_zero():
    fld = make_phantom(PhantomSpec("angular-mode", [ModeTerm(0, 0.0, 0.5, 1.0, 0.0)]))
    r = np.linspace(0, 0.6, 13)
    vals = [fld.evaluate_polar(np.full_like(r, a), r) for a in np.linspace(0, 6, 7)]
    for f1, f2 in vals:
        np.testing.assert_allclose(f1, vals[0][0], atol=1e-15)
        assert np.all(f2 == 0)


def test_mode_two_coefficient_extraction():
    fld = make_phantom(PhantomSpec("angular-mode", [ModeTerm(2, 0.4, 0.2, 0.8, -0.6, 0.4, 1.0)]))
    r = np.linspace(0.05, 0.7, 40)
    a_num, b_num = angular_coefficient(fld, 2, r, n_phi=64)
    a_ex, b_ex = mode_profiles(fld, 2, r)
    assert np.max(np.abs(a_num - a_ex)) <= 1e-8
    assert np.max(np.abs(b_num - b_ex)) <= 1e-8
    a3, _ = angular_coefficient(fld, 3, r, n_phi=64)
    assert np.max(np.abs(a3)) <= 1e-12


def test_support_bound_enforced():
    with pytest.raises(DomainError, match="support"):
        make_phantom(PhantomSpec("potential", [BumpTerm((0.5, 0.0), 0.3, 1.0)], support_bound=0.7))


def test_mode_ring_must_stay_off_origin():
    with pytest.raises(DomainError):
        make_phantom(PhantomSpec("angular-mode", [ModeTerm(2, 0.1, 0.2)]))


def test_spec_json_round_trip():
    spec = PhantomSpec("mixture", [BumpTerm((0.1, 0.2), 0.3, (1.0, -2.0)), ModeTerm(3, 0.4, 0.1, 1, 2, 3, 4)],
                       R=2.0, support_bound=1.5)
    back = PhantomSpec.from_json(spec.to_json())
    assert back == spec


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["potential", "solenoidal", "angular-mode", "mixture"]),
       st.floats(0.3, 1.0))
def test_measured_support_within_declared(seed, kind, support):
    fld = random_phantom(np.random.default_rng(seed), kind, 3, support)
    assert measured_support_radius(fld, 200, 128) <= fld.support
    assert fld.support < support * fld.R + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["angular-mode", "mixture"]))
def test_polar_cartesian_consistency(seed, kind):
    fld = random_phantom(np.random.default_rng(seed), kind, 3, 0.9)
    rng = np.random.default_rng(seed + 1)
    phi = rng.uniform(-7, 7, 200)
    r = rng.uniform(0, 1, 200)
    p1, p2 = fld.evaluate_polar(phi, r)
    c1, c2 = fld(r * np.cos(phi), r * np.sin(phi))
    np.testing.assert_allclose(p1, c1, rtol=0, atol=1e-12)
    np.testing.assert_allclose(p2, c2, rtol=0, atol=1e-12)


def test_perp_rotates_by_ninety_degrees():
    fld = random_phantom(np.random.default_rng(3), "mixture", 3, 0.8)
    x, y = _pts(4)
    f1, f2 = fld(x, y)
    g1, g2 = fld.perp()(x, y)
    np.testing.assert_array_equal(g1, -f2)
    np.testing.assert_array_equal(g2, f1)
    h1, h2 = fld.perp().perp()(x, y)
    np.testing.assert_array_equal(h1, -f1)


def test_constant_grid_reevaluated_at_centers():
    vals = np.zeros((6, 5, 2))
    vals[..., 0] = 2.5
    vals[..., 1] = -1.0
    grid = GridVectorField(vals, 1.0)
    f1, f2 = grid(*grid_points(5, 6, 1.0))
    assert np.all(f1 == 2.5) and np.all(f2 == -1.0)


def test_grid_bilinear_reproduces_samples_at_centers():
    fld = random_phantom(np.random.default_rng(11), "mixture", 3, 0.8)
    g = sample_to_grid(fld, 33, 21)
    X, Y = grid_points(33, 21, 1.0)
    f1, f2 = g(X, Y)
    np.testing.assert_allclose(f1, g.f1, atol=1e-14)
    np.testing.assert_allclose(f2, g.f2, atol=1e-14)


def test_sampling_refinement_second_order():
    fld = make_phantom(PhantomSpec("mixture", [BumpTerm((0.1, 0.0), 0.6, (1.0, 0.5))]))
    errs = []
    for n in (32, 64, 128):
        coarse = sample_to_grid(fld, n, n).values
        fine = sample_to_grid(fld, 2 * n, 2 * n).values
        down = fine.reshape(n, 2, n, 2, 2).mean(axis=(1, 3))
        errs.append(np.max(np.abs(down - coarse)))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.5


def test_zero_field_samples_to_zero():
    zero = AnalyticVectorField(1.0, func=lambda x, y: (np.zeros_like(x), np.zeros_like(x)))
    assert not np.any(sample_to_grid(zero, 4, 5).values)


def test_grid_rejects_tiny_and_nonfinite():
    with pytest.raises(DomainError):
        sample_to_grid(random_phantom(np.random.default_rng(0)), 2, 8)
    with pytest.raises(DomainError):
        GridScalarField(np.array([[np.nan, 0], [0, 0]]), 1.0)


def test_linear_combination_of_fields():
    rng = np.random.default_rng(5)
    f, g = random_phantom(rng, "mixture"), random_phantom(rng, "angular-mode")
    x, y = _pts(6)
    h1, h2 = (f.scaled(2.0) + g)(x, y)
    f1, f2 = f(x, y)
    g1, g2 = g(x, y)
    np.testing.assert_allclose(h1, 2 * f1 + g1, atol=1e-14)
    np.testing.assert_allclose(h2, 2 * f2 + g2, atol=1e-14)
