"""Full-data inversion: V-line data to straight-line data to componentwise FBP.

With ``d`` sampled on ``[0, 2R]`` and an even number of ``beta`` samples,
every term of the combination formulas sits on the sampling grid, so the
straight-line sinograms come out on a uniform ``(psi, p)`` grid with
``psi = beta + theta + pi/2`` and ``p = (d - R) sin(theta)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, SupportWarning
from .fields import GridScalarField, GridVectorField, cell_centers
from .forward import SSinogram, VSinogram
from .geometry import TWO_PI, normalize_angle

EDGE_BAND = 0.98
EDGE_MASS_LIMIT = 1e-3


@dataclass
class ComponentSinograms:
    radon_f1: SSinogram
    radon_f2: SSinogram


def _check_full_grid(sino: VSinogram):
    if sino.n_beta % 2:
        raise DomainError(f"n_beta must be even so beta + pi is on the grid, got {sino.n_beta}")
    R = sino.R
    if abs(sino.d_min) > 1e-12 * R or abs(sino.d_max - 2 * R) > 1e-12 * R:
        raise DomainError(
            f"d grid must span [0, 2R] so d -> 2R - d is on the grid, got [{sino.d_min}, {sino.d_max}]")


def _combine(values, sign):
    n_beta, n_d = values.shape
    opposite = np.roll(values, -(n_beta // 2), axis=0)[:, ::-1]
    diameter = values[:, n_d - 1:n_d]
    return sign * (values - opposite - diameter)


def combine_to_lrt(L: VSinogram) -> SSinogram:
    """Longitudinal ray transform from longitudinal V-line data."""
    if L.kind != "longitudinal":
        raise DomainError("combine_to_lrt needs longitudinal V-line data")
    _check_full_grid(L)
    return SSinogram("longitudinal_ray", normalize_angle(L.theta + 0.5 * math.pi),
                     L.R * math.sin(L.theta), _combine(L.values, 1.0))


def combine_to_trt(T: VSinogram) -> SSinogram:
    """Transverse ray transform from transverse V-line data.

    The second leg's normal ``v_perp`` is ``-w`` for the line ``(psi, p)``,
    hence the overall minus sign.
    """
    if T.kind != "transverse":
        raise DomainError("combine_to_trt needs transverse V-line data")
    _check_full_grid(T)
    return SSinogram("transverse_ray", normalize_angle(T.theta + 0.5 * math.pi),
                     T.R * math.sin(T.theta), _combine(T.values, -1.0))


def solve_components(I: SSinogram, J: SSinogram) -> ComponentSinograms:
    """Radon data of ``f1`` and ``f2`` from ``I f`` and ``J f``.

    The system matrix ``[[-sin, cos], [cos, sin]]`` is symmetric and its own
    inverse.
    """
    if (I.values.shape != J.values.shape or not math.isclose(I.psi0, J.psi0, abs_tol=1e-12)
            or not math.isclose(I.p_max, J.p_max, rel_tol=1e-12)):
        raise DomainError("I and J sinograms must share their (psi, p) grid")
    s = np.sin(I.psi)[:, None]
    c = np.cos(I.psi)[:, None]
    r1 = -s * I.values + c * J.values
    r2 = c * I.values + s * J.values
    return ComponentSinograms(SSinogram("radon", I.psi0, I.p_max, r1),
                              SSinogram("radon", I.psi0, I.p_max, r2))


def ramlak_filter(values, dp):
    """Band-limited ramp filter along the last axis (Nyquist cut-off).

    Uses the sampled spatial Ram-Lak kernel, transformed to the frequency
    domain with zero padding so the convolution is linear, not circular.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    n_fft = 1 << int(math.ceil(math.log2(2 * n)))
    k = np.fft.fftfreq(n_fft, 1.0 / n_fft).astype(int)
    h = np.zeros(n_fft)
    h[0] = 1.0 / (4.0 * dp * dp)
    odd = k % 2 == 1
    h[odd] = -1.0 / (math.pi * k[odd] * dp) ** 2
    H = np.fft.rfft(h)
    G = np.fft.rfft(values, n_fft, axis=-1)
    return dp * np.fft.irfft(G * H, n_fft, axis=-1)[..., :n]


def fbp_invert_arrays(values, psi, p, nx, ny, R) -> GridScalarField:
    values = np.asarray(values, dtype=float)
    psi = np.asarray(psi, dtype=float)
    p = np.asarray(p, dtype=float)
    if p.size < 2 or values.shape != (psi.size, p.size):
        raise DomainError("sinogram shape does not match its (psi, p) samples")
    dp = (p[-1] - p[0]) / (p.size - 1)
    if not dp > 0 or np.max(np.abs(np.diff(p) - dp)) > 1e-9 * max(abs(dp), 1.0):
        raise DomainError("p samples must be uniform and increasing")
    steps = np.diff(psi)
    dpsi = TWO_PI / psi.size
    if np.max(np.abs(steps - dpsi), initial=0.0) > 1e-9:
        raise DomainError("psi samples must cover [0, 2pi) uniformly")
    q = ramlak_filter(values, dp)
    img = kernels.backproject(q, psi, p[0], dp, cell_centers(nx, R), cell_centers(ny, R))
    # every line appears twice over [0, 2pi)
    return GridScalarField(0.5 * dpsi * img, R)


def fbp_invert(rsino: SSinogram, nx: int, ny: int, R=None) -> GridScalarField:
    """Filtered backprojection of Radon data sampled over ``psi in [0, 2 pi)``."""
    if rsino.kind != "radon":
        raise DomainError("fbp_invert needs Radon data")
    R = rsino.p_max if R is None else R
    return fbp_invert_arrays(rsino.values, rsino.psi, rsino.p, nx, ny, R)


def edge_mass_fraction(*sinos: SSinogram) -> float:
    total = 0.0
    edge = 0.0
    for s in sinos:
        band = np.abs(s.p) >= EDGE_BAND * s.p_max
        a = np.abs(s.values)
        total += a.sum()
        edge += a[:, band].sum()
    return edge / total if total > 0 else 0.0


def reconstruct_full(L: VSinogram, T: VSinogram, nx: int, ny: int) -> GridVectorField:
    """Vector field on an ``nx x ny`` grid over ``[-R, R]^2`` from full V-line data.

    Pixels outside the disk of radius ``R sin(theta)``, where the data
    determine nothing, are set to zero.
    """
    if not (L.R == T.R and L.theta == T.theta and L.values.shape == T.values.shape):
        raise DomainError("L and T sinograms must share R, theta and grid")
    comps = solve_components(combine_to_lrt(L), combine_to_trt(T))
    frac = edge_mass_fraction(comps.radon_f1, comps.radon_f2)
    if frac > EDGE_MASS_LIMIT:
        warnings.warn(
            f"{frac:.2e} of the sinogram mass sits at |p| near R sin(theta); the field is "
            "probably not supported inside the recoverable disk", SupportWarning, stacklevel=2)
    R = L.R
    f1 = fbp_invert(comps.radon_f1, nx, ny, R).values
    f2 = fbp_invert(comps.radon_f2, nx, ny, R).values
    xs = cell_centers(nx, R)
    ys = cell_centers(ny, R)
    outside = np.hypot(*np.meshgrid(xs, ys)) > R * math.sin(L.theta)
    f1[outside] = 0.0
    f2[outside] = 0.0
    return GridVectorField(np.stack([f1, f2], axis=-1), R)
