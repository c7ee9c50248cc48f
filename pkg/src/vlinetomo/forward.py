"""Quadrature of V-line, straight-line and Radon transforms.

Every transform reduces to integrals of ``weight . f`` along straight
segments, which the hot kernels in :mod:`vlinetomo.kernels` evaluate with
composite Simpson.  For analytic phantoms each segment is first clipped to
the support disk of each primitive, so the fixed step resolves the bumps
and nothing is spent on empty space.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._kernels_py import _simpson_batch
from .errors import DomainError, NumericError
from .fields import AnalyticScalarField, AnalyticVectorField, GridScalarField, GridVectorField, ScalarField
from .geometry import TWO_PI, second_leg_exit

VLINE_KINDS = ("longitudinal", "transverse")
LINE_KINDS = ("longitudinal_ray", "transverse_ray", "radon")


def default_step(R: float) -> float:
    return R / 2000.0


@dataclass
class VSinogram:
    """V-line data on a ``(beta, d)`` grid; ``values[i, j]`` is at ``(beta_i, d_j)``."""

    kind: str
    R: float
    theta: float
    d_min: float
    d_max: float
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in VLINE_KINDS:
            raise DomainError(f"unknown V-line kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or min(self.values.shape) < 2:
            raise DomainError(f"sinogram grid must be at least 2x2, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("sinogram values must be finite")
        if not 0.0 <= self.d_min < self.d_max <= 2.0 * self.R * (1 + 1e-12):
            raise DomainError(f"d range [{self.d_min}, {self.d_max}] not inside [0, 2R]")

    @property
    def n_beta(self) -> int:
        return self.values.shape[0]

    @property
    def n_d(self) -> int:
        return self.values.shape[1]

    @property
    def beta(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_beta) / self.n_beta

    @property
    def d(self) -> np.ndarray:
        return np.linspace(self.d_min, self.d_max, self.n_d)

    def with_values(self, values) -> "VSinogram":
        return VSinogram(self.kind, self.R, self.theta, self.d_min, self.d_max, values)


@dataclass
class SSinogram:
    """Straight-line data; ``values[k, j]`` is at ``psi0 + 2 pi k / n_psi`` and the
    ``j``-th of ``n_p`` uniform ``p`` samples on ``[-p_max, p_max]``."""

    kind: str
    psi0: float
    p_max: float
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in LINE_KINDS:
            raise DomainError(f"unknown line-transform kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or min(self.values.shape) < 2:
            raise DomainError(f"sinogram grid must be at least 2x2, got {self.values.shape}")

    @property
    def n_psi(self) -> int:
        return self.values.shape[0]

    @property
    def n_p(self) -> int:
        return self.values.shape[1]

    @property
    def psi(self) -> np.ndarray:
        return self.psi0 + TWO_PI * np.arange(self.n_psi) / self.n_psi

    @property
    def p(self) -> np.ndarray:
        return np.linspace(-self.p_max, self.p_max, self.n_p)

    @property
    def dp(self) -> float:
        return 2.0 * self.p_max / (self.n_p - 1)


# ---------------------------------------------------------------------------
# segment integration

def _integrate(fld, segs, step, workers=1):
    if not step > 0:
        raise DomainError(f"quad_step must be positive, got {step}")
    segs = np.ascontiguousarray(segs, dtype=float).reshape(-1, 7)
    if isinstance(fld, AnalyticVectorField) and fld.terms is not None:
        def run(chunk):
            return kernels.integrate_segments(fld.terms, chunk, step)
    elif isinstance(fld, GridVectorField):
        def run(chunk):
            return kernels.integrate_segments_grid(fld.values, fld.R, chunk, step)
    elif isinstance(fld, AnalyticVectorField):
        def run(chunk):
            x0, y0, ex, ey, length, wx, wy = chunk.T

            def evaluate(seg, s):
                f1, f2 = fld(x0[seg] + s * ex[seg], y0[seg] + s * ey[seg])
                return wx[seg] * f1 + wy[seg] * f2
            return _simpson_batch(np.zeros_like(length), length, step, evaluate)
    else:
        raise DomainError(f"cannot integrate a {type(fld).__name__}")

    if workers and workers > 1 and segs.shape[0] > 1:
        # per-segment values do not depend on how the rows are split
        chunks = np.array_split(segs, min(workers * 4, segs.shape[0]))
        with ThreadPoolExecutor(workers) as ex:
            out = np.concatenate(list(ex.map(run, chunks)))
    else:
        out = run(segs)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite transform values; check the field for NaN or inf")
    return out


def vline_segments(kind, beta, d, R, theta):
    """Segment table rows for both legs: shape ``(..., 2, 7)``."""
    beta, d = np.broadcast_arrays(np.asarray(beta, dtype=float), np.asarray(d, dtype=float))
    cb, sb = np.cos(beta), np.sin(beta)
    cv, sv = np.cos(beta + theta), np.sin(beta + theta)
    exit_ = second_leg_exit(beta, d, R, theta)
    # u = -(cb, sb), v = -(cv, sv); perpendiculars rotate by +90 degrees
    if kind == "longitudinal":
        w1 = (-cb, -sb)
        w2 = (-cv, -sv)
    else:
        w1 = (sb, -cb)
        w2 = (sv, -cv)
    leg1 = np.stack([R * cb, R * sb, -cb, -sb, d, w1[0], w1[1]], axis=-1)
    leg2 = np.stack([(R - d) * cb, (R - d) * sb, -cv, -sv, exit_, w2[0], w2[1]], axis=-1)
    return np.stack([leg1, leg2], axis=-2)


def _check_theta(theta):
    if not 0.0 < theta < 0.5 * math.pi:
        raise DomainError(f"theta must lie in (0, pi/2), got {theta!r}")


def vline_transform(kind: str, fld, beta, d, theta: float, quad_step=None, workers=1):
    """Longitudinal or transverse V-line transform at ``(beta, d)`` (broadcast)."""
    if kind not in VLINE_KINDS:
        raise DomainError(f"unknown V-line kind {kind!r}")
    _check_theta(theta)
    R = fld.R
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0.0) or np.any(d_arr > 2.0 * R * (1 + 1e-12)):
        raise DomainError(f"d must lie in [0, 2R] = [0, {2 * R}]")
    step = default_step(R) if quad_step is None else quad_step
    segs = vline_segments(kind, beta, np.minimum(d_arr, 2.0 * R), R, theta)
    shape = segs.shape[:-2]
    vals = _integrate(fld, segs.reshape(-1, 7), step, workers).reshape(shape + (2,)).sum(axis=-1)
    return float(vals) if vals.ndim == 0 else vals


def line_segments(kind, psi, p, R):
    psi, p = np.broadcast_arrays(np.asarray(psi, dtype=float), np.asarray(p, dtype=float))
    c, s = np.cos(psi), np.sin(psi)
    half = np.sqrt(np.maximum(R * R - p * p, 0.0))
    if kind == "longitudinal_ray":
        wx, wy = -s, c
    elif kind == "transverse_ray":
        wx, wy = c, s
    else:
        wx, wy = np.ones_like(c), np.zeros_like(c)
    return np.stack([p * c + half * s, p * s - half * c, -s, c, 2 * half, wx, wy], axis=-1)


def straight_line_transform(kind: str, fld, psi, p, quad_step=None, workers=1):
    """``I f`` (``longitudinal_ray``), ``J f`` (``transverse_ray``) or the Radon
    transform (``radon``, scalar fields) on the line ``x . w(psi) = p``."""
    if kind not in LINE_KINDS:
        raise DomainError(f"unknown line-transform kind {kind!r}")
    if kind == "radon":
        if isinstance(fld, AnalyticScalarField):
            fld = fld.as_vector()
        elif isinstance(fld, GridScalarField):
            fld = GridVectorField(np.stack([fld.values, np.zeros_like(fld.values)], axis=-1), fld.R)
        elif not isinstance(fld, ScalarField):
            raise DomainError("the Radon transform takes a scalar field")
    elif isinstance(fld, ScalarField):
        raise DomainError(f"{kind} takes a vector field")
    R = fld.R
    step = default_step(R) if quad_step is None else quad_step
    segs = line_segments(kind, psi, p, R)
    shape = segs.shape[:-1]
    vals = _integrate(fld, segs.reshape(-1, 7), step, workers).reshape(shape)
    return float(vals) if vals.ndim == 0 else vals


def simulate_vsinograms(fld, theta: float, n_beta: int, n_d: int, d_range=None,
                        quad_step=None, workers=1):
    """Both V-line sinograms on a shared ``(beta, d)`` grid."""
    if n_beta < 2 or n_d < 2:
        raise DomainError(f"grids need at least 2 samples, got n_beta={n_beta}, n_d={n_d}")
    R = fld.R
    d_min, d_max = (0.0, 2.0 * R) if d_range is None else map(float, d_range)
    if not 0.0 <= d_min < d_max <= 2.0 * R:
        raise DomainError(f"d range [{d_min}, {d_max}] not inside [0, 2R]")
    beta = TWO_PI * np.arange(n_beta) / n_beta
    d = np.linspace(d_min, d_max, n_d)
    B, D = np.meshgrid(beta, d, indexing="ij")
    out = []
    for kind in VLINE_KINDS:
        vals = vline_transform(kind, fld, B, D, theta, quad_step, workers)
        out.append(VSinogram(kind, R, theta, d_min, d_max, vals))
    return tuple(out)


def simulate_ssinogram(kind: str, fld, n_psi: int, n_p: int, p_max=None, psi0: float = 0.0,
                       quad_step=None, workers=1) -> SSinogram:
    p_max = fld.R if p_max is None else p_max
    psi = psi0 + TWO_PI * np.arange(n_psi) / n_psi
    P, Q = np.meshgrid(psi, np.linspace(-p_max, p_max, n_p), indexing="ij")
    vals = straight_line_transform(kind, fld, P, Q, quad_step, workers)
    return SSinogram(kind, psi0, p_max, vals)
