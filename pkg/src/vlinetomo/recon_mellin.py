"""Partial-data inversion, ``d in [0, R]``, by angular Fourier modes.

Data are reparametrized by the vertex radius ``t = R - d`` and expanded in
``beta``; the field by its polar angle::

    f1 = sum_n a_n(r) e^{i n phi},   f2 = sum_n b_n(r) e^{i n phi}
    L  = sum_n p_n(t) e^{i n beta},  T  = sum_n q_n(t) e^{i n beta}

In unit-radius variables, with ``c+ = a_n + i b_n`` and ``c- = a_n - i b_n``::

    -(p_{n-1} + i q_{n-1})(t) = int_t^1 c+ + e^{-2i theta} {[r c+] x h_n}(t)
    -(p_{n+1} - i q_{n+1})(t) = int_t^1 c- + {[r c-] x h_n}(t)

where ``{g x h}(t) = int g(r) h(t/r) dr / r``.  Each is a Volterra-type
equation, solved either by Mellin quotients along ``Re s = c`` or by direct
collocation.  The equations only see ``r <= 1`` when the field is supported
inside the disk of radius ``sin(theta)``; beyond that the convolution reaches
radii the data rows ``t <= 1`` never isolate, and the Mellin route (which
implicitly extends the data to ``t > 1`` by zero) loses exactness.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.interpolate import BSpline

from .errors import ConditioningWarning, DomainError, NumericError
from .fields import GridVectorField, cell_centers
from .forward import VSinogram
from .mellin import (DEFAULT_C, DEFAULT_D_OMEGA, DEFAULT_OMEGA_MAX, MellinSamples, _gauss_on,
                     contour_omegas, convolution_nodes, inverse_mellin, kernel_h, mellin_kernel_h,
                     mellin_numeric, psi_of)

ROLES = ("a", "b", "p", "q")
DENOM_EPS = 1e-8
RESIDUAL_WARN = 1e-3
EMPTY_MODE = 1e-10


@dataclass
class FourierProfiles:
    """Radial profiles of the angular modes ``-N..N`` on a uniform grid over ``[0, R]``."""

    role: str
    R: float
    grid: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        if self.role not in ROLES:
            raise DomainError(f"unknown profile role {self.role!r}")
        self.grid = np.asarray(self.grid, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] % 2 == 0 or self.coeffs.shape[1] != self.grid.size:
            raise DomainError("coefficients must have shape (2N+1, n_grid)")

    @property
    def N(self) -> int:
        return self.coeffs.shape[0] // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def mode(self, n: int) -> np.ndarray:
        if abs(n) > self.N:
            raise DomainError(f"mode {n} outside |n| <= {self.N}")
        return self.coeffs[n + self.N]

    def conjugate_defect(self) -> float:
        return float(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1])), initial=0.0))

    def symmetrized(self) -> "FourierProfiles":
        c = 0.5 * (self.coeffs + np.conj(self.coeffs[::-1]))
        return FourierProfiles(self.role, self.R, self.grid, c)

    def resum(self, angles) -> np.ndarray:
        """``sum_n c_n(r) e^{i n angle}``, shape ``(len(angles), n_grid)``."""
        E = np.exp(1j * np.outer(np.asarray(angles, dtype=float), self.modes))
        return E @ self.coeffs


@dataclass(frozen=True)
class KernelH:
    n: int
    theta: float

    def __call__(self, t):
        return kernel_h(self.n, self.theta, t)

    def psi(self, t):
        return psi_of(t, self.theta)

    @property
    def support(self) -> float:
        return 1.0 / math.sin(self.theta)

    def mellin(self, sigma):
        return mellin_kernel_h(self.n, self.theta, sigma)


@dataclass
class PartialReconstruction:
    field: GridVectorField
    a: FourierProfiles
    b: FourierProfiles
    regularized: dict = field(default_factory=dict)
    imag_residual: float = 0.0


def _t_grid(sino: VSinogram):
    if sino.d_max > sino.R * (1 + 1e-12):
        raise DomainError(f"partial data must have d <= R, got d_max = {sino.d_max}")
    return sino.R - sino.d[::-1], sino.values[:, ::-1]


def angular_fft_profiles(sino: VSinogram, N: int) -> FourierProfiles:
    """Discrete angular Fourier coefficients of a V-line sinogram in ``t = R - d``."""
    if N < 0 or sino.n_beta < 2 * N + 2:
        raise DomainError(f"n_beta = {sino.n_beta} cannot resolve modes up to N = {N} (needs >= 2N+2)")
    t, vals = _t_grid(sino)
    spec = np.fft.fft(vals, axis=0) / sino.n_beta
    idx = np.arange(-N, N + 1) % sino.n_beta
    role = "p" if sino.kind == "longitudinal" else "q"
    return FourierProfiles(role, sino.R, t, spec[idx])


def _unit_profiles(p: FourierProfiles, q: FourierProfiles):
    if p.role != "p" or q.role != "q":
        raise DomainError("expected longitudinal (p) and transverse (q) profiles")
    if p.coeffs.shape != q.coeffs.shape or not np.array_equal(p.grid, q.grid) or p.R != q.R:
        raise DomainError("p and q profiles must share modes and grid")
    g = p.grid
    if abs(g[0]) > 1e-12 * p.R or abs(g[-1] - p.R) > 1e-12 * p.R:
        raise DomainError("profiles must cover t in [0, R]")
    return g / p.R, p.R


def data_sides(p: FourierProfiles, q: FourierProfiles, n: int, unit: bool = True):
    """Left sides ``(L+, L-)`` of the ``c+`` and ``c-`` equations for mode ``n``."""
    if abs(n) + 1 > p.N:
        raise DomainError(f"mode {n} needs data modes up to {abs(n) + 1}, have {p.N}")
    scale = p.R if unit else 1.0
    lp = -(p.mode(n - 1) + 1j * q.mode(n - 1)) / scale
    lm = -(p.mode(n + 1) - 1j * q.mode(n + 1)) / scale
    return lp, lm


_BRIDGE = np.array([-1.0, 4.0, 4.0, -1.0]) / 6.0  # cubic through offsets -2, -1, 1, 2 at 0


def _quotient(num, den, eps):
    """``num / den`` along the contour with a policy for ``|den| < eps``.

    Isolated small samples (two good neighbours on each side) are bridged by
    cubic interpolation of the quotient: for consistent data the numerator
    vanishes with the denominator and the quotient stays analytic there.
    Other small samples get the Tikhonov quotient.
    """
    small = np.abs(den) < eps
    out = np.empty_like(num)
    out[..., ~small] = num[..., ~small] / den[~small]
    out[..., small] = num[..., small] * np.conj(den[small]) / (np.abs(den[small]) ** 2 + eps * eps)
    for k in np.flatnonzero(small):
        nb = [k - 2, k - 1, k + 1, k + 2]
        if nb[0] >= 0 and nb[-1] < den.size and not small[nb].any():
            out[..., k] = out[..., nb] @ _BRIDGE
    return out, int(small.sum())


def mellin_coefficients(p: FourierProfiles, q: FourierProfiles, n: int, theta: float,
                        c: float = DEFAULT_C, omega=None, eps: float = DENOM_EPS, _kernel=None):
    """``(M a_n, M b_n, n_regularized)`` on ``Re s = c`` for unit-radius profiles.

    The transforms refer to ``a_n(R r)`` and ``b_n(R r)`` as functions of
    ``r in [0, 1]``.
    """
    if not c > 1:
        raise DomainError(f"contour abscissa must exceed 1, got {c}")
    omega = contour_omegas() if omega is None else np.asarray(omega, dtype=float)
    t, _ = _unit_profiles(p, q)
    sigma = (c - 1.0) + 1j * omega
    lp, lm = data_sides(p, q, n)
    ML = mellin_numeric((t, np.stack([lp, lm])), sigma)
    Mh = mellin_kernel_h(n, theta, sigma) if _kernel is None else _kernel
    return _mode_quotients(ML[0], ML[1], Mh, sigma, theta, c, omega, eps)


def _mode_quotients(MLp, MLm, Mh, sigma, theta, c, omega, eps):
    inv = 1.0 / sigma
    cp, k1 = _quotient(MLp, inv + np.exp(-2j * theta) * Mh, eps)
    cm, k2 = _quotient(MLm, inv + Mh, eps)
    Ma = MellinSamples(c, omega, 0.5 * (cp + cm))
    Mb = MellinSamples(c, omega, (cp - cm) / 2j)
    return Ma, Mb, k1 + k2


def spline_knots(n_intervals: int, r_max: float = 1.0):
    """Clamped cubic knots on ``[0, r_max]`` and their distinct breakpoints."""
    if n_intervals < 1:
        raise DomainError("need at least one spline interval")
    br = np.linspace(0.0, r_max, n_intervals + 1)
    return np.concatenate([[0.0] * 3, br, [r_max] * 3]), br


def collocation_operator(n: int, theta: float, t, n_intervals: int, order: int = 6,
                         r_max: float = 1.0):
    """Matrices ``(A_int, A_conv)`` acting on cubic B-spline coefficients with
    ``int_t^1 g ~ A_int @ coef`` and ``{[r g] x h_n}(t) ~ A_conv @ coef``,
    integrated interval by interval so each Gauss panel sees a polynomial."""
    knots, br = spline_knots(n_intervals, r_max)
    t = np.asarray(t, dtype=float)
    rows_i, r_i, w_i = [], [], []
    rows_k, r_k, w_k = [], [], []
    for i, ti in enumerate(t):
        edges = np.concatenate([[ti], br[br > ti]]) if ti < r_max else np.array([r_max, r_max])
        r, w = _gauss_on(edges, order)
        rows_i.append(np.full(r.size, i))
        r_i.append(r)
        w_i.append(w)
        r, w = convolution_nodes(n, theta, float(ti), r_max, breaks=br, order=order)
        rows_k.append(np.full(r.size, i))
        r_k.append(r)
        w_k.append(w)

    def assemble(rows, r, w, dtype):
        rows, r, w = np.concatenate(rows), np.concatenate(r), np.concatenate(w)
        D = BSpline.design_matrix(np.clip(r, 0.0, r_max), knots, 3)
        S = sparse.csr_matrix((w.astype(dtype), (rows, np.arange(r.size))), shape=(t.size, r.size))
        return (S @ D).toarray()

    return assemble(rows_i, r_i, w_i, float), assemble(rows_k, r_k, w_k, complex)


def _solve(A, rhs):
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    res = np.linalg.norm(A @ sol - rhs)
    norm = np.linalg.norm(rhs)
    if norm > 0 and res > RESIDUAL_WARN * norm:
        warnings.warn(f"collocation residual {res / norm:.2e} of the data norm", ConditioningWarning,
                      stacklevel=3)
    return sol


def direct_collocation_solve(p: FourierProfiles, q: FourierProfiles, n: int, theta: float,
                             r_grid=None, n_intervals=None, order: int = 6, support=None):
    """``(a_n, b_n)`` on ``r_grid`` (default: the data grid) by collocation.

    ``c+`` and ``c-`` are cubic B-splines on ``[0, support]`` (default
    ``R sin(theta)``) and the equations are collocated at every data node,
    solved by least squares.  Unknowns on the annulus beyond ``R sin(theta)``
    are only reached through smooth kernels, so the system becomes severely
    ill-conditioned there; widen ``support`` only with exact data.
    """
    t, R = _unit_profiles(p, q)
    r = t if r_grid is None else np.asarray(r_grid, dtype=float) / R
    if np.any(r < -1e-12) or np.any(r > 1 + 1e-12):
        raise DomainError("r grid must lie in [0, R]")
    rho = math.sin(theta) if support is None else support / R
    if not 0 < rho <= 1:
        raise DomainError(f"support must lie in (0, R], got {support}")
    if n_intervals is None:
        n_intervals = max(8, (t.size - 1) // 4)
    lp, lm = data_sides(p, q, n)
    out = np.zeros((2, r.size), dtype=complex)
    if np.any(lp) or np.any(lm):
        A_int, A_conv = collocation_operator(n, theta, t, n_intervals, order, rho)
        coef = [_solve(A_int + np.exp(-2j * theta) * A_conv, lp), _solve(A_int + A_conv, lm)]
        knots, _ = spline_knots(n_intervals, rho)
        inside = r <= rho
        E = BSpline.design_matrix(r[inside], knots, 3)
        for k in range(2):
            out[k, inside] = E @ coef[k]
    cp, cm = out
    return 0.5 * (cp + cm), (cp - cm) / 2j


def _polar_resample(prof: FourierProfiles, nx, ny, R):
    xs = cell_centers(nx, R)
    ys = cell_centers(ny, R)
    X, Y = np.meshgrid(xs, ys)
    r = np.hypot(X, Y).ravel()
    phi = np.arctan2(Y, X).ravel()
    out = np.zeros(r.size, dtype=complex)
    inside = r <= R
    for n, c in zip(prof.modes, prof.coeffs):
        vals = np.interp(r[inside], prof.grid, c.real) + 1j * np.interp(r[inside], prof.grid, c.imag)
        out[inside] += vals * np.exp(1j * n * phi[inside])
    return out.reshape(ny, nx)


def reconstruct_partial(L: VSinogram, T: VSinogram, N: int, nx: int, ny: int, method: str = "mellin",
                        c: float = DEFAULT_C, omega_max: float = DEFAULT_OMEGA_MAX,
                        d_omega: float = DEFAULT_D_OMEGA, eps: float = DENOM_EPS,
                        support=None, workers: int = 1) -> PartialReconstruction:
    """Recover the modes ``|n| <= N`` of ``f`` from ``L`` and ``T`` on ``d in [0, R]``."""
    if method not in ("mellin", "collocation"):
        raise DomainError(f"unknown method {method!r}")
    if L.kind != "longitudinal" or T.kind != "transverse":
        raise DomainError("need longitudinal L and transverse T sinograms")
    if not (L.R == T.R and L.theta == T.theta and L.values.shape == T.values.shape
            and L.d_min == T.d_min and L.d_max == T.d_max):
        raise DomainError("L and T sinograms must share R, theta and grid")
    R, theta = L.R, L.theta
    if abs(L.d_min) > 1e-12 * R or abs(L.d_max - R) > 1e-12 * R:
        raise DomainError(f"partial data must cover d in [0, R], got [{L.d_min}, {L.d_max}]")
    if L.n_beta < 2 * N + 4:
        raise DomainError(f"n_beta = {L.n_beta} too small for N = {N} (modes up to N+1 are used)")
    p = angular_fft_profiles(L, N + 1)
    q = angular_fft_profiles(T, N + 1)
    t, _ = _unit_profiles(p, q)
    modes = list(range(-N, N + 1))
    # modes whose data are at rounding level relative to the strongest stay zero
    level = np.array([max(np.max(np.abs(s)) for s in data_sides(p, q, n)) for n in modes])
    empty = level <= EMPTY_MODE * np.max(level, initial=0.0)
    zero = np.zeros(t.size, dtype=complex)

    if method == "mellin":
        omega = contour_omegas(omega_max, d_omega)
        sigma = (c - 1.0) + 1j * omega
        sides = np.stack([np.stack(data_sides(p, q, n)) for n in modes])
        ML = mellin_numeric((t, sides), sigma)
        Mh = mellin_kernel_h(modes, theta, sigma)

        def run(k):
            n = modes[k]
            if empty[k]:
                return zero, zero, 0
            Ma, Mb, flagged = _mode_quotients(ML[k, 0], ML[k, 1], Mh[k], sigma, theta, c, omega, eps)
            origin = "nearest" if n == 0 else "zero"
            return inverse_mellin(Ma, t, origin), inverse_mellin(Mb, t, origin), flagged
    else:
        def run(k):
            if empty[k]:
                return zero, zero, 0
            a, b = direct_collocation_solve(p, q, modes[k], theta, support=support)
            return a, b, 0

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, range(len(modes))))
    else:
        results = [run(k) for k in range(len(modes))]

    grid = R * t
    a = FourierProfiles("a", R, grid, np.stack([res[0] for res in results]))
    b = FourierProfiles("b", R, grid, np.stack([res[1] for res in results]))
    if not (np.all(np.isfinite(a.coeffs)) and np.all(np.isfinite(b.coeffs))):
        raise NumericError("non-finite mode profiles; check the contour parameters")
    f1 = _polar_resample(a, nx, ny, R)
    f2 = _polar_resample(b, nx, ny, R)
    scale = max(np.max(np.abs(f1)), np.max(np.abs(f2)), np.finfo(float).tiny)
    imag = max(np.max(np.abs(f1.imag)), np.max(np.abs(f2.imag))) / scale
    a, b = a.symmetrized(), b.symmetrized()
    f1 = _polar_resample(a, nx, ny, R).real
    f2 = _polar_resample(b, nx, ny, R).real
    flagged = {n: res[2] for n, res in zip(modes, results)}
    return PartialReconstruction(GridVectorField(np.stack([f1, f2], axis=-1), R), a, b, flagged, imag)


def profiles_csv_rows(a: FourierProfiles, b: FourierProfiles):
    """Diagnostic rows ``(n, r, Re a_n, Im a_n, Re b_n, Im b_n)``."""
    for n in a.modes:
        for r, x, y in zip(a.grid, a.mode(n), b.mode(n)):
            yield int(n), float(r), x.real, x.imag, y.real, y.imag
