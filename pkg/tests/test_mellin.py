import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from vlinetomo.errors import DomainError
from vlinetomo.mellin import (MellinSamples, contour_omegas, convolution_nodes, inverse_mellin, kernel_h,
                              kernel_h_printed, kernel_quadrature, mellin_kernel_h, mellin_numeric,
                              mult_convolution, psi_of, simpson_weights)

thetas = st.floats(0.05, 1.5)
modes = st.integers(-6, 6)


def _poly_profile(rng):
    q = np.polynomial.Polynomial(rng.normal(size=4))
    P = np.polynomial.Polynomial([1.0, -1.0]) ** 3 * q
    return lambda p: np.where(p <= 1, P(p), 0.0), P


def test_gamma_calibration():
    assert abs(mellin_numeric(lambda p: np.exp(-p), 2.0, r_max=40.0) - 1.0) <= 1e-6
    s = np.array([0.7, 1.5 + 3j, 3.0 - 2j])
    np.testing.assert_allclose(mellin_numeric(lambda p: np.exp(-p), s, r_max=40.0), special.gamma(s), rtol=1e-6)


def test_polynomial_mellin_closed_form():
    # M[(1-p)^2 1{p<1}](s) = 2 / (s (s+1) (s+2))
    s = 1.2 + 1j * np.linspace(-30, 30, 13)
    got = mellin_numeric(lambda p: np.where(p <= 1, (1 - p) ** 2, 0.0), s, r_max=1.0)
    np.testing.assert_allclose(got, 2 / (s * (s + 1) * (s + 2)), rtol=1e-6, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_property_shift(seed, k):
    rng = np.random.default_rng(seed)
    f, _ = _poly_profile(rng)
    s = 1.0 + rng.uniform(0.1, 2.0, 8) + 1j * rng.uniform(-20, 20, 8)
    lhs = mellin_numeric(lambda p: p ** k * f(p), s, r_max=1.0)
    rhs = mellin_numeric(f, s + k, r_max=1.0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_property_tail_integral(seed):
    rng = np.random.default_rng(seed)
    f, P = _poly_profile(rng)
    Q = P.integ()
    tail = lambda t: np.where(t <= 1, Q(1.0) - Q(t), 0.0)  # noqa: E731
    s = rng.uniform(0.3, 3.0, 8) + 1j * rng.uniform(-20, 20, 8)
    lhs = mellin_numeric(tail, s, r_max=1.0)
    rhs = mellin_numeric(f, s + 1, r_max=1.0) / s
    assert np.max(np.abs(lhs - rhs)) <= 1e-6


def test_sampled_profile_matches_callable():
    r = np.linspace(0, 1, 513)
    f = lambda p: np.where(p <= 1, np.sin(3 * p) * (1 - p) ** 3, 0.0)  # noqa: E731
    s = 1.5 + 1j * np.linspace(-10, 10, 5)
    a = mellin_numeric((r, f(r)), s)
    b = mellin_numeric(f, s, r_max=1.0)
    assert np.max(np.abs(a - b)) <= 1e-8
    batched = mellin_numeric((r, np.stack([f(r), 2 * f(r)])), s)
    np.testing.assert_allclose(batched[1], 2 * a, atol=1e-14)


def test_mellin_domain():
    with pytest.raises(DomainError):
        mellin_numeric(lambda p: p, -0.5, r_max=1.0)
    with pytest.raises(DomainError):
        mellin_numeric(lambda p: p, 1.0)


@pytest.fixture(scope="module")
def exp_samples():
    omega = contour_omegas(200.0, 0.05)
    return MellinSamples(2.0, omega, mellin_numeric(lambda p: np.exp(-p), 2.0 + 1j * omega, r_max=40.0))


def test_inverse_round_trip(exp_samples):
    r = np.linspace(0.1, 3.0, 59)
    assert np.max(np.abs(inverse_mellin(exp_samples, r) - np.exp(-r))) <= 1e-3


def test_inverse_is_linear(exp_samples):
    r = np.linspace(0.1, 3.0, 17)
    other = MellinSamples(2.0, exp_samples.omega, 1.0 / (exp_samples.s + 1.0))
    mix = MellinSamples(2.0, exp_samples.omega, 2.0 * exp_samples.values - 3.0 * other.values)
    np.testing.assert_allclose(inverse_mellin(mix, r),
                               2 * inverse_mellin(exp_samples, r) - 3 * inverse_mellin(other, r), atol=1e-12)


def test_inverse_truncation_refinement():
    # M[(1-p)^2 1{p<1}] decays like |omega|^-3; error falls as Omega grows
    r = np.linspace(0.1, 0.9, 33)
    exact = (1 - r) ** 2
    errs = []
    for omega_max in (25.0, 50.0, 100.0):
        om = contour_omegas(omega_max, 0.05)
        s = 1.5 + 1j * om
        M = MellinSamples(1.5, om, 2 / (s * (s + 1) * (s + 2)))
        errs.append(np.max(np.abs(inverse_mellin(M, r) - exact)))
    assert errs[0] > errs[1] > errs[2]


def test_inverse_origin_conventions(exp_samples):
    r = np.array([0.0, 0.1])
    assert inverse_mellin(exp_samples, r)[0] == 0
    near = inverse_mellin(exp_samples, r, origin="nearest")
    assert near[0] == near[1]
    with pytest.raises(DomainError):
        inverse_mellin(MellinSamples(2.0, [0.0, 0.1, 0.3], [1, 1, 1]), r)


def test_contour_and_weights():
    om = contour_omegas(1.0, 0.25)
    np.testing.assert_allclose(om, [-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1])
    w = simpson_weights(5, 0.5)
    assert w.sum() == pytest.approx(2.0)
    with pytest.raises(DomainError):
        simpson_weights(4, 0.5)


# ---------------------------------------------------------------------------
# kernel

@pytest.mark.parametrize("n", [-3, 0, 1, 4])
@pytest.mark.parametrize("theta", [0.2, 0.7, 1.3])
def test_kernel_vanishes_beyond_branch(n, theta):
    st_ = math.sin(theta)
    assert kernel_h(n, theta, 1.01 / st_) == 0
    assert np.all(kernel_h(n, theta, np.linspace(1.0001, 5.0, 50) / st_) == 0)


def test_psi_at_one():
    assert psi_of(1.0, 0.5) == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(modes, thetas)
def test_kernel_small_t_limit(n, theta):
    assert abs(kernel_h(n, theta, 1e-12) - (-1) ** n * np.exp(1j * (n + 1) * theta)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(modes, thetas, st.floats(1e-3, 0.999))
def test_kernel_matches_printed_form(n, theta, frac):
    # sample the whole support (0, 1/sin theta), both branches, away from t = 1
    t = frac / math.sin(theta)
    if abs(t - 1.0) < 1e-3:
        t += 2e-3
    if t * math.sin(theta) >= 0.999:
        return
    ours = complex(kernel_h(n, theta, t))
    ref = kernel_h_printed(n, theta, t)
    assert abs(ours - ref) <= 1e-10 * max(1.0, abs(ref))


def test_kernel_left_limit_conventions():
    theta = 0.6
    assert kernel_h(2, theta, 1.0) == pytest.approx(kernel_h_printed(2, theta, 1.0), abs=1e-14)
    assert np.isinf(kernel_h(2, theta, 1.0 / math.sin(theta)).real)
    with pytest.raises(DomainError):
        kernel_h(1, theta, 0.0)
    with pytest.raises(DomainError):
        kernel_h(1, 1.6, 0.5)


@pytest.mark.parametrize("n", [-2, 0, 3])
@pytest.mark.parametrize("theta", [0.3, 1.1])
def test_kernel_quadrature_stays_inside_support(n, theta):
    (x, _, _), (lt, _, _), _ = kernel_quadrature(n, theta)
    top = -math.log(math.sin(theta))
    assert x.max() <= 0.0 and lt.max() <= top + 1e-15


def _scipy_mellin_h(n, theta, sigma):
    """Oracle in the original variable; the inverse-sqrt end point goes to the
    algebraic weight of QUADPACK.  The printed kernel cancels badly just above
    t = 1, so the checked equivalent form is integrated."""
    top = 1.0 / math.sin(theta)
    out = 0j
    for part in (np.real, np.imag):
        def f(tau):
            return float(part(tau ** (sigma - 1) * kernel_h(n, theta, tau)))

        def g(tau):
            tau = min(tau, top * (1 - 1e-14))  # rounding can step past the end point
            return f(tau) * math.sqrt(top - tau)
        v = (integrate.quad(f, 0, 1, limit=400, epsabs=1e-12)[0]
             + integrate.quad(g, 1, top, weight="alg", wvar=(0.0, -0.5), limit=400, epsabs=1e-12)[0])
        out += v if part is np.real else 1j * v
    return out


@pytest.mark.parametrize("n, theta, sigma", [(0, 0.5, 0.5 + 2j), (2, 0.8, 0.5 - 7j), (-3, 1.2, 1.5 + 0.3j),
                                             (5, 0.3, 0.9 + 15j)])
def test_mellin_kernel_against_adaptive_quadrature(n, theta, sigma):
    assert abs(mellin_kernel_h(n, theta, sigma) - _scipy_mellin_h(n, theta, sigma)) <= 1e-7


def test_mellin_kernel_batched_modes():
    sig = 0.5 + 1j * np.linspace(-5, 5, 7)
    both = mellin_kernel_h([1, -2], 0.7, sig)
    np.testing.assert_allclose(both[1], mellin_kernel_h(-2, 0.7, sig), atol=1e-14)
    with pytest.raises(DomainError):
        mellin_kernel_h(1, 0.7, -0.5)


def _scipy_convolution(g, n, theta, t):
    st_ = math.sin(theta)
    hi = 1.0
    pts = [p for p in (t, t * st_) if 0 < p < hi]
    out = 0j
    for part in (np.real, np.imag):
        def f(r):
            return float(part(g(r) * kernel_h(n, theta, t / r))) if r * 1.0 > t * st_ else 0.0
        v = integrate.quad(f, t * st_, hi, points=pts or None, limit=800, epsabs=1e-12)[0]
        out += v if part is np.real else 1j * v
    return out


@pytest.mark.parametrize("t", [0.0, 0.05, 0.3, 0.7, 0.95, 1.2])
@pytest.mark.parametrize("n", [0, 2, -3])
def test_convolution_against_adaptive_quadrature(t, n):
    theta = 0.7
    g = lambda r: np.where(r <= 1, np.cos(2 * r) * (1 - r) ** 2, 0.0)  # noqa: E731
    ours = complex(mult_convolution(g, n, theta, t)[0])
    if t == 0.0:
        ref = (-1) ** n * np.exp(1j * (n + 1) * theta) * integrate.quad(lambda r: float(g(r)), 0, 1)[0]
    else:
        ref = _scipy_convolution(g, n, theta, t)
    assert abs(ours - ref) <= 1e-7


def test_convolution_empty_when_chord_misses():
    r, w = convolution_nodes(1, 0.5, 3.0)
    assert r.size == 0 and w.size == 0


def test_convolution_in_mellin_space():
    # M[{[r g] x h}](sigma) = M g(sigma + 1) M h(sigma)
    theta, n = 0.6, 2
    g = lambda r: np.where(r <= 1, (1 - r) ** 4 * (1 + r), 0.0)  # noqa: E731
    sigma = 0.5 + 1j * np.array([-3.0, 0.0, 2.0, 6.0])
    lhs = mellin_numeric(lambda t: mult_convolution(g, n, theta, t), sigma, r_max=1 / math.sin(theta),
                         n_nodes=4097)
    rhs = mellin_numeric(g, sigma + 1, r_max=1.0) * mellin_kernel_h(n, theta, sigma)
    assert np.max(np.abs(lhs - rhs)) <= 1e-3 * np.max(np.abs(rhs))
