"""Numerical Mellin transforms and the mode-n broken-ray kernel.

``M f(s) = int_0^inf p^(s-1) f(p) dp`` is evaluated after ``p = e^x`` on a
log grid, with the piece below the grid floor integrated analytically as if
``f`` were constant there.  The inverse is the trapezoid rule on a vertical
line ``Re s = c``, an inverse Fourier transform in ``log r``.

The kernel ``h_n`` lives on ``(0, 1/sin(theta)]`` in unit-radius variables.
Written with ``psi(t) = arcsin(t sin(theta)) + theta``::

    h_n(t) = e^{i theta} [e^{i n (pi + psi)} + 1{t > 1} e^{i n (2 theta - psi)}]
             / sqrt(1 - t^2 sin^2 theta)

which is the arc-length density of the second leg seen from radius ``r``
with ``t/r`` as argument.  Near ``t = 1/sin(theta)`` it has an integrable
inverse square-root singularity, removed below by ``t sin(theta) = sin(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError

# on c = 2 the c+ denominator of mode +-2 vanishes at omega = 0; the quotient
# there is bridged (see recon_mellin._quotient)
DEFAULT_C = 2.0
# the inverse carries r^-c, so truncation ringing dominates near r = 0;
# 200 keeps it below 1e-2 at the first node of a 512-point profile
DEFAULT_OMEGA_MAX = 200.0
DEFAULT_D_OMEGA = 0.05
LOG_NODES = 8193
FLOOR = 1e-6
_CHUNK = 128


@dataclass
class MellinSamples:
    """Values of a Mellin transform at ``s = c + i omega`` on a uniform grid."""

    c: float
    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.omega.size < 2 or self.values.shape[-1] != self.omega.size:
            raise DomainError("Mellin samples need at least two omega nodes matching the values")

    @property
    def s(self) -> np.ndarray:
        return self.c + 1j * self.omega

    @property
    def d_omega(self) -> float:
        return float(self.omega[1] - self.omega[0])


def contour_omegas(omega_max: float = DEFAULT_OMEGA_MAX, d_omega: float = DEFAULT_D_OMEGA) -> np.ndarray:
    if not (omega_max > 0 and d_omega > 0):
        raise DomainError("omega_max and d_omega must be positive")
    k = int(round(omega_max / d_omega))
    return d_omega * np.arange(-k, k + 1)


def simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        raise DomainError(f"Simpson needs an odd node count >= 3, got {n}")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


def _as_callable(profile, r_max):
    if callable(profile):
        if r_max is None:
            raise DomainError("a callable profile needs r_max")
        return profile, float(r_max)
    r, vals = profile
    r = np.asarray(r, dtype=float)
    vals = np.asarray(vals)
    if r_max is None:
        r_max = float(r[-1])
    spline = CubicSpline(r, vals, axis=-1)

    def f(p):
        out = spline(np.minimum(p, r[-1]))
        return np.where(p <= r[-1], out, 0.0)
    return f, float(r_max)


def _mellin_sum(values, x, weights, s, extra):
    """``sum_k w_k e^{s x_k} values[..., k] + extra(s)``, chunked over ``s``."""
    s = np.atleast_1d(s)
    vw = values * weights
    out = np.empty(values.shape[:-1] + s.shape, dtype=complex)
    for a in range(0, s.size, _CHUNK):
        ss = s[a:a + _CHUNK]
        E = np.exp(np.outer(x, ss))
        out[..., a:a + _CHUNK] = vw @ E
    return out + extra(s)


def mellin_numeric(profile, s, r_max=None, floor=FLOOR, n_nodes=LOG_NODES):
    """Mellin transform of a profile supported on ``[0, r_max]``.

    ``profile`` is a callable or a pair ``(r, values)`` of samples; sampled
    values may carry leading batch axes and are interpolated by cubic
    splines.  ``s`` may be an array.  Returns complex values with shape
    ``batch + s.shape``.
    """
    s_arr = np.asarray(s, dtype=complex)
    if np.any(s_arr.real <= 0):
        raise DomainError("the Mellin transform here needs Re(s) > 0")
    f, r_max = _as_callable(profile, r_max)
    p_min = floor * r_max
    x = np.linspace(math.log(p_min), math.log(r_max), n_nodes)
    w = simpson_weights(n_nodes, x[1] - x[0])
    p = np.exp(x)
    vals = np.asarray(f(p), dtype=complex)
    head = np.asarray(f(np.array([p_min])), dtype=complex)[..., 0]

    def below_floor(ss):
        return head[..., None] * p_min ** ss / ss

    out = _mellin_sum(vals, x, w, s_arr.ravel(), below_floor)
    out = out.reshape(out.shape[:-1] + s_arr.shape)
    return out[()] if out.ndim == 0 else out


def inverse_mellin(M: MellinSamples, r, origin: str = "zero"):
    """Trapezoid inversion ``(1/2 pi) sum_k r^{-c - i omega_k} M_k d_omega``.

    At ``r = 0`` the formula is singular: ``origin="zero"`` returns 0 (the
    limit for profiles vanishing at the origin, every mode ``n != 0``) and
    ``origin="nearest"`` copies the value at the smallest positive ``r``.
    """
    omega = M.omega
    steps = np.diff(omega)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
        raise DomainError("inverse_mellin needs a uniform omega grid")
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    pos = flat > 0
    w = np.full(omega.size, M.d_omega)
    w[0] = w[-1] = 0.5 * M.d_omega
    vals = M.values * w / (2 * math.pi)
    out = np.zeros(M.values.shape[:-1] + flat.shape, dtype=complex)
    logr = np.log(flat[pos])
    res = np.empty(M.values.shape[:-1] + logr.shape, dtype=complex)
    for a in range(0, logr.size, _CHUNK):
        lr = logr[a:a + _CHUNK]
        E = np.exp(-np.outer(M.c + 1j * omega, lr))
        res[..., a:a + _CHUNK] = vals @ E
    out[..., pos] = res
    if origin == "nearest" and (~pos).any() and pos.any():
        out[..., ~pos] = res[..., [int(np.argmin(logr))]]
    elif origin not in ("zero", "nearest"):
        raise DomainError(f"unknown origin convention {origin!r}")
    return out.reshape(M.values.shape[:-1] + r.shape)


# ---------------------------------------------------------------------------
# kernel

def psi_of(t, theta):
    return np.arcsin(np.asarray(t, dtype=float) * math.sin(theta)) + theta


def _check_theta(theta):
    if not 0.0 < theta < 0.5 * math.pi:
        raise DomainError(f"theta must lie in (0, pi/2), got {theta!r}")


def kernel_h(n: int, theta: float, t):
    """Mode-``n`` kernel; ``t = 1`` takes the left branch, ``t = 1/sin(theta)``
    returns ``inf`` (the left limit of the integrable singularity)."""
    _check_theta(theta)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("kernel_h is defined for t > 0")
    st = math.sin(theta)
    inside = t * st < 1.0
    tc = np.where(inside, t, 0.0)
    psi = psi_of(tc, theta)
    root = np.sqrt(np.where(inside, 1.0 - (tc * st) ** 2, 1.0))
    val = np.exp(1j * n * (math.pi + psi))
    val = val + np.where(tc > 1.0, np.exp(1j * n * (2 * theta - psi)), 0.0)
    out = np.exp(1j * theta) * val / root
    out = np.where(inside, out, 0.0)
    out = np.where(np.isclose(t * st, 1.0, rtol=0, atol=1e-15), np.inf + 0j, out)
    return out[()] if out.ndim == 0 else out


def kernel_h_printed(n: int, theta: float, t: float) -> complex:
    """The kernel exactly as the closed form is usually printed (scalar ``t``).

    Kept to cross-check :func:`kernel_h`; the ``1 < t`` branch is a 0/0 at
    ``t = 1``.
    """
    st = math.sin(theta)
    if t * st >= 1.0:
        return 0j
    ps = math.asin(t * st) + theta
    sq = math.sqrt(1 - (t * st) ** 2)
    a = ((-1) ** n * np.exp(1j * theta) * np.exp(1j * n * ps)
         * (1 + t * math.cos(ps) + t * t * math.sin(ps) * st / sq)
         / math.sqrt(1 + t * t + 2 * t * math.cos(ps)))
    if t <= 1.0:
        return complex(a)
    ph = 2 * theta - ps
    b = (np.exp(1j * theta) * np.exp(1j * n * ph)
         * (1 - t * math.cos(ph) + t * t * math.sin(ph) * st / sq)
         / math.sqrt(1 + t * t - 2 * t * math.cos(ph)))
    return complex(a - b)


def _gauss_on(edges, order):
    """Gauss-Legendre nodes and weights on each interval of the sorted ``edges``."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return x, w


def _gauss_panels(a, b, panels, order=32):
    return _gauss_on(np.linspace(a, b, panels + 1), order)


def _edges(a, b, breaks, panels):
    if breaks is None:
        return np.linspace(a, b, panels + 1)
    inner = np.asarray(breaks, dtype=float)
    inner = inner[(inner > a) & (inner < b)]
    return np.concatenate([[a], inner, [b]])


def kernel_quadrature(n, theta, floor=FLOOR, n_nodes=LOG_NODES, panels=16):
    """Nodes for ``int_0^{1/sin theta} tau^(sigma-1) h_n(tau) d tau``.

    Returns ``(x, wx, vx)`` for the log-grid part on ``[floor, 1]`` (nodes
    ``x = log tau``, weights, ``h_n(tau)``) and ``(lt, wu, vu)`` for the
    part on ``[1, 1/sin theta]`` in the variable ``u`` (nodes ``log tau``,
    weights, integrand without the ``tau^(sigma-1)`` factor), and ``h_n(0)``.
    """
    _check_theta(theta)
    st = math.sin(theta)
    x = np.linspace(math.log(floor), 0.0, n_nodes)
    wx = simpson_weights(n_nodes, x[1] - x[0])
    tau = np.exp(x)
    vx = kernel_h(n, theta, tau)
    # tau sin(theta) = sin(u) on [1, 1/sin theta]; the 1/cos(u) cancels dtau
    u, wu = _gauss_panels(theta, 0.5 * math.pi, panels)
    tau_u = np.sin(u) / st
    vu = (np.exp(1j * theta) * (np.exp(1j * n * (math.pi + u + theta)) + np.exp(1j * n * (theta - u)))
          / st)
    h0 = complex(np.exp(1j * theta) * np.exp(1j * n * (math.pi + theta)))
    return (x, wx, vx), (np.log(tau_u), wu, vu), h0


def mellin_kernel_h(n, theta: float, sigma, floor=FLOOR, n_nodes=LOG_NODES):
    """Mellin transform of :func:`kernel_h` at ``sigma`` (``Re sigma > 0``).

    ``n`` may be a sequence of modes; the result then gains a leading axis.
    """
    sig = np.asarray(sigma, dtype=complex)
    if np.any(sig.real <= 0):
        raise DomainError("M h_n needs Re(sigma) > 0")
    modes = np.atleast_1d(np.asarray(n, dtype=int))
    parts = [kernel_quadrature(int(m), theta, floor, n_nodes) for m in modes]
    (x, wx, _), (lt, wu, _), _ = parts[0]
    vx = np.stack([q[0][2] for q in parts])
    vu = np.stack([q[1][2] for q in parts])
    h0 = np.array([q[2] for q in parts])[:, None]
    flat = sig.ravel()
    low = _mellin_sum(vx, x, wx, flat, lambda ss: h0 * floor ** ss / ss)
    high = _mellin_sum(vu, lt, wu, flat - 1.0, lambda ss: 0.0)
    out = (low + high).reshape((modes.size,) + sig.shape)
    if np.ndim(n) == 0:
        out = out[0]
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# multiplicative convolution {[r g] x h_n}(t) = int g(r) h_n(t/r) dr

def convolution_nodes(n: int, theta: float, t: float, r_max: float = 1.0, panels=8,
                      breaks=None, order=32):
    """Nodes ``r_k`` and complex weights ``w_k`` with
    ``int_0^r_max g(r) h_n(t/r) dr ~ sum_k w_k g(r_k)``.

    Gauss panels split at ``breaks`` (radii where ``g`` may have kinks) when
    given, otherwise ``panels`` equal pieces per part.
    """
    _check_theta(theta)
    st = math.sin(theta)
    if t <= 0.0:
        r, w = _gauss_on(_edges(0.0, r_max, breaks, panels), order)
        h0 = np.exp(1j * theta) * np.exp(1j * n * (math.pi + theta))
        return r, w * h0
    rs, ws = [], []
    if t < r_max:
        # tau = t/r <= 1: bounded, smooth kernel
        r, w = _gauss_on(_edges(t, r_max, breaks, panels), order)
        rs.append(r)
        ws.append(w * kernel_h(n, theta, t / r))
    # both legs of the chord: r = t sin(theta)/sin(u), u in [theta, pi/2]
    if t * st < r_max:
        u_lo = max(theta, math.asin(min(1.0, t * st / r_max)))
        if breaks is None:
            u_edges = np.linspace(u_lo, 0.5 * math.pi, panels + 1)
        else:
            rb = np.asarray(breaks, dtype=float)
            rb = rb[(rb > t * st) & (rb < min(t, r_max))]
            u_edges = np.concatenate([[u_lo], np.sort(np.arcsin(t * st / rb)), [0.5 * math.pi]])
            u_edges = u_edges[u_edges >= u_lo]
        u, w = _gauss_on(u_edges, order)
        r = t * st / np.sin(u)
        jac = t * st / np.sin(u) ** 2
        val = np.exp(1j * theta) * (np.exp(1j * n * (math.pi + u + theta)) + np.exp(1j * n * (theta - u)))
        rs.append(r)
        ws.append(w * jac * val)
    if not rs:
        return np.zeros(0), np.zeros(0, dtype=complex)
    return np.concatenate(rs), np.concatenate(ws)


def mult_convolution(g, n: int, theta: float, t, r_max: float = 1.0, panels=8):
    """``{[r g] x h_n}(t)`` for a callable ``g`` supported on ``[0, r_max]``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape, dtype=complex)
    for i, ti in enumerate(t):
        r, w = convolution_nodes(n, theta, float(ti), r_max, panels)
        out[i] = np.sum(w * g(r))
    return out
