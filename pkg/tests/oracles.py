"""Shared oracles and phantoms for the partial-data tests."""

import math

import numpy as np
from scipy import integrate

from vlinetomo.fields import ModeTerm, PhantomSpec, make_phantom, mode_profiles
from vlinetomo.forward import vline_transform
from vlinetomo.mellin import mult_convolution

# band-limited phantom (|n| <= 4) supported inside R sin(pi/4)
BAND_THETA = math.pi / 4
BAND_TERMS = [ModeTerm(0, 0.3, 0.2, 1.0, 0.5, 0.0, 0.0), ModeTerm(2, 0.35, 0.2, 0.8, -0.6, 0.4, 1.0),
              ModeTerm(3, 0.4, 0.2, 0.5, 0.7, -0.3, 0.2), ModeTerm(4, 0.45, 0.18, 0.6, 0.4, 1.2, -0.5),
              ModeTerm(1, 0.3, 0.25, 0.7, 0.3, 0.1, 0.9)]


def band_phantom():
    return make_phantom(PhantomSpec("angular-mode", BAND_TERMS, 1.0, math.sin(BAND_THETA)))


def single_mode_phantom(n=2, theta=BAND_THETA, amps=(0.8, -0.6), phases=(0.4, 1.0)):
    return make_phantom(PhantomSpec("angular-mode", [ModeTerm(n, 0.35, 0.2, *amps, *phases)], 1.0,
                                    math.sin(theta)))


def data_modes(fld, theta, t, n_beta=64):
    """``p_k(t), q_k(t)`` for ``k = 0..n_beta-1`` (FFT order) by direct forward evaluation."""
    beta = 2 * np.pi * np.arange(n_beta) / n_beta
    B, D = np.meshgrid(beta, fld.R - np.asarray(t, dtype=float), indexing="ij")
    L = vline_transform("longitudinal", fld, B, D, theta)
    T = vline_transform("transverse", fld, B, D, theta)
    return np.fft.fft(L, axis=0) / n_beta, np.fft.fft(T, axis=0) / n_beta


def _cquad(g, a, b, points):
    pts = [p for p in points if a < p < b] or None
    re = integrate.quad(lambda r: float(np.real(g(r))), a, b, points=pts, limit=400, epsabs=1e-14)[0]
    im = integrate.quad(lambda r: float(np.imag(g(r))), a, b, points=pts, limit=400, epsabs=1e-14)[0]
    return re + 1j * im


def relation_sides(fld, n, theta, t, n_beta=64):
    """Left and right sides of the ``c+`` and ``c-`` mode equations (unit radius)
    with exact ``a_n, b_n`` on the right; returns ``(lp, rp, lm, rm)``."""
    P, Q = data_modes(fld, theta, t, n_beta)
    lp = -(P[(n - 1) % n_beta] + 1j * Q[(n - 1) % n_beta])
    lm = -(P[(n + 1) % n_beta] - 1j * Q[(n + 1) % n_beta])

    def a(r):
        return mode_profiles(fld, n, np.asarray(r, dtype=float))[0]

    def b(r):
        return mode_profiles(fld, n, np.asarray(r, dtype=float))[1]

    def cp(r):
        return a(r) + 1j * b(r)

    def cm(r):
        return a(r) - 1j * b(r)
    kinks = sorted({float(row[6] + s * row[7]) for row in fld.terms for s in (-1, 0, 1)})
    rp = np.array([_cquad(cp, ti, 1.0, kinks) for ti in t])
    rm = np.array([_cquad(cm, ti, 1.0, kinks) for ti in t])
    rp = rp + np.exp(-2j * theta) * mult_convolution(cp, n, theta, t, panels=16)
    rm = rm + mult_convolution(cm, n, theta, t, panels=16)
    return lp, rp, lm, rm
