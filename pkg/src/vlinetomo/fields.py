"""Scalar and vector fields on the disk: analytic phantoms and sampled grids.

Analytic fields are sums of compactly supported primitives stored in a term
table (see :mod:`vlinetomo.kernels`); the forward kernels integrate those
exactly term by term.  Fields without a table carry plain callables.
Grids are cell-centered on ``[-R, R]^2`` with shape ``(ny, nx)`` (scalar) or
``(ny, nx, 2)`` (vector), row index along ``y``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import kernels
from ._kernels_py import BUMP, GRAD, MODE, PERP, bump_and_grad, ring_profile
from .errors import DomainError

SUPPORT_TOL = 1e-14


def cell_centers(n: int, R: float) -> np.ndarray:
    h = 2.0 * R / n
    return -R + h * (np.arange(n) + 0.5)


def grid_points(nx: int, ny: int, R: float):
    return np.meshgrid(cell_centers(nx, R), cell_centers(ny, R))


# ---------------------------------------------------------------------------
# term-level derivatives

def _bump_hessian(dx, dy, rho):
    q = (dx * dx + dy * dy) / (rho * rho)
    inside = q < 1.0
    om = np.where(inside, 1.0 - q, 1.0)
    phi = np.where(inside, np.exp(-1.0 / om), 0.0)
    d1 = -phi / om**2
    d2 = -d1 / om**2 - 2.0 * phi / om**3
    s = 2.0 / (rho * rho)
    hxx = d2 * s * s * dx * dx + d1 * s
    hyy = d2 * s * s * dy * dy + d1 * s
    hxy = d2 * s * s * dx * dy
    return hxx, hxy, hyy


def _mode_grad(row, x, y, amp, phase):
    """Gradient of ``amp g(r) cos(n ang + phase)`` about the term center."""
    dx = x - row[1]
    dy = y - row[2]
    r = np.hypot(dx, dy)
    ang = np.arctan2(dy, dx)
    r0, w, n = row[6], row[7], row[8]
    g = ring_profile(r, r0, w)
    z = (r - r0) / w
    om = np.where(z * z < 1.0, 1.0 - z * z, 1.0)
    dg = -g / om**2 * 2.0 * z / w
    arg = n * ang + phase
    safe_r = np.where(r > 0.0, r, 1.0)
    tang = np.where(r > 0.0, n * g * np.sin(arg) / safe_r, 0.0)
    gx = amp * (np.cos(ang) * dg * np.cos(arg) + np.sin(ang) * tang)
    gy = amp * (np.sin(ang) * dg * np.cos(arg) - np.cos(ang) * tang)
    return gx, gy


def terms_jacobian(terms, x, y):
    """Jacobian ``(d f_i / d x_j)`` of a vector term table.

    Returns ``j11, j12, j21, j22``.  Ring-mode terms are differentiated
    through the chain rule on ``(r, ang)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape
    j11, j12, j21, j22 = (np.zeros(shape) for _ in range(4))
    for row in np.asarray(terms, dtype=float).reshape(-1, 11):
        kind = int(row[0])
        if kind == MODE:
            g1x, g1y = _mode_grad(row, x, y, row[4], row[9])
            g2x, g2y = _mode_grad(row, x, y, row[5], row[10])
            j11 += g1x
            j12 += g1y
            j21 += g2x
            j22 += g2y
            continue
        dx = x - row[1]
        dy = y - row[2]
        if kind == BUMP:
            _, gx, gy = bump_and_grad(dx, dy, row[3])
            j11 += row[4] * gx
            j12 += row[4] * gy
            j21 += row[5] * gx
            j22 += row[5] * gy
            continue
        hxx, hxy, hyy = _bump_hessian(dx, dy, row[3])
        a = row[4]
        if kind == GRAD:
            j11 += a * hxx
            j12 += a * hxy
            j21 += a * hxy
            j22 += a * hyy
        else:
            j11 -= a * hxy
            j12 -= a * hyy
            j21 += a * hxx
            j22 += a * hxy
    return j11, j12, j21, j22


def _table_support(terms) -> float:
    rad = 0.0
    for row in np.asarray(terms, dtype=float).reshape(-1, 11):
        rad = max(rad, math.hypot(row[1], row[2]) + row[3])
    return rad


# ---------------------------------------------------------------------------
# field classes

class ScalarField:
    R: float
    support: float

    def __call__(self, x, y):
        raise NotImplementedError

    def evaluate_polar(self, phi, r):
        return self(r * np.cos(phi), r * np.sin(phi))


class VectorField:
    R: float
    support: float

    def __call__(self, x, y):
        """Return the pair ``(f1, f2)`` at the given points."""
        raise NotImplementedError

    def evaluate_polar(self, phi, r):
        return self(r * np.cos(phi), r * np.sin(phi))

    def perp(self) -> "VectorField":
        """The rotated field ``(-f2, f1)``."""
        raise NotImplementedError


class AnalyticScalarField(ScalarField):
    """Scalar field from a term table (value is the ``f1`` column) or a callable."""

    def __init__(self, R, terms=None, func=None, grad=None, support=None):
        if (terms is None) == (func is None):
            raise DomainError("give exactly one of terms or func")
        self.R = float(R)
        self.terms = None if terms is None else np.asarray(terms, dtype=float).reshape(-1, 11)
        self.func = func
        self.grad_func = grad
        self.support = float(support if support is not None else
                             (_table_support(self.terms) if self.terms is not None else R))

    def __call__(self, x, y):
        if self.terms is not None:
            return kernels.eval_terms(self.terms, x, y)[0]
        return np.asarray(self.func(np.asarray(x, float), np.asarray(y, float)), dtype=float)

    def as_vector(self) -> "AnalyticVectorField":
        """The field ``(f, 0)``, so that Radon data can reuse the vector kernels."""
        if self.terms is not None:
            t = self.terms.copy()
            t[:, 5] = 0.0
            return AnalyticVectorField(self.R, terms=t)
        return AnalyticVectorField(self.R, func=lambda x, y: (self(x, y), np.zeros(np.shape(x))),
                                   support=self.support)


class AnalyticVectorField(VectorField):
    def __init__(self, R, terms=None, func=None, jacobian=None, support=None):
        if (terms is None) == (func is None):
            raise DomainError("give exactly one of terms or func")
        self.R = float(R)
        self.terms = None if terms is None else np.asarray(terms, dtype=float).reshape(-1, 11)
        self.func = func
        self.jacobian_func = jacobian
        self.support = float(support if support is not None else
                             (_table_support(self.terms) if self.terms is not None else R))

    def __call__(self, x, y):
        if self.terms is not None:
            return kernels.eval_terms(self.terms, x, y)
        f1, f2 = self.func(np.asarray(x, float), np.asarray(y, float))
        return np.asarray(f1, dtype=float), np.asarray(f2, dtype=float)

    def jacobian(self, x, y):
        if self.terms is not None:
            return terms_jacobian(self.terms, x, y)
        if self.jacobian_func is None:
            raise DomainError("analytic field carries no derivatives")
        return self.jacobian_func(x, y)

    def perp(self):
        if self.terms is None:
            def rotated(x, y):
                f1, f2 = self(x, y)
                return -f2, f1
            return AnalyticVectorField(self.R, func=rotated, support=self.support)
        rows = []
        for row in self.terms:
            r = row.copy()
            kind = int(row[0])
            if kind == BUMP:
                r[4], r[5] = -row[5], row[4]
            elif kind == GRAD:
                r[0] = PERP
            elif kind == PERP:
                r[0] = GRAD
                r[4] = -row[4]
            else:
                # -a2 cos(x + alpha2) = a2 cos(x + alpha2 + pi)
                r[4], r[9] = row[5], row[10] + math.pi
                r[5], r[10] = row[4], row[9]
            rows.append(r)
        return AnalyticVectorField(self.R, terms=np.array(rows))

    def scaled(self, alpha: float) -> "AnalyticVectorField":
        if self.terms is None:
            return AnalyticVectorField(self.R, func=lambda x, y: tuple(alpha * c for c in self(x, y)),
                                       support=self.support)
        t = self.terms.copy()
        t[:, 4:6] *= alpha
        return AnalyticVectorField(self.R, terms=t)

    def __add__(self, other):
        if isinstance(other, AnalyticVectorField) and self.terms is not None and other.terms is not None:
            return AnalyticVectorField(self.R, terms=np.vstack([self.terms, other.terms]))

        def summed(x, y):
            a1, a2 = self(x, y)
            b1, b2 = other(x, y)
            return a1 + b1, a2 + b2
        return AnalyticVectorField(self.R, func=summed, support=max(self.support, other.support))


class GridScalarField(ScalarField):
    def __init__(self, values, R):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise DomainError("scalar grid must be 2-D")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid values must be finite")
        self.values = values
        self.R = float(R)
        self.support = float(R)

    @property
    def shape(self):
        return self.values.shape

    def __call__(self, x, y):
        return kernels.bilinear(self.values, self.R, x, y)


class GridVectorField(VectorField):
    def __init__(self, values, R):
        values = np.asarray(values, dtype=float)
        if values.ndim != 3 or values.shape[2] != 2:
            raise DomainError("vector grid must have shape (ny, nx, 2)")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid values must be finite")
        self.values = values
        self.R = float(R)
        self.support = float(R)

    @property
    def shape(self):
        return self.values.shape[:2]

    @property
    def f1(self):
        return self.values[..., 0]

    @property
    def f2(self):
        return self.values[..., 1]

    def __call__(self, x, y):
        v = kernels.bilinear(self.values, self.R, x, y)
        return v[..., 0], v[..., 1]

    def perp(self):
        return GridVectorField(np.stack([-self.values[..., 1], self.values[..., 0]], axis=-1), self.R)


# ---------------------------------------------------------------------------
# operators

def _grid_gradient(values, R):
    ny, nx = values.shape
    if nx < 3 or ny < 3:
        raise DomainError(f"grid too small for differences: {nx}x{ny}, need at least 3x3")
    hx = 2.0 * R / nx
    hy = 2.0 * R / ny
    gy, gx = np.gradient(values, hy, hx, edge_order=1)
    return gx, gy


def apply_diff_operator(kind: str, fld):
    """Apply ``grad``, ``grad_perp`` (scalar to vector) or ``div``, ``curl``
    (vector to scalar).  ``curl f = d f2/dx1 - d f1/dx2``."""
    if kind in ("grad", "grad_perp"):
        if isinstance(fld, GridScalarField):
            gx, gy = _grid_gradient(fld.values, fld.R)
            comps = (gx, gy) if kind == "grad" else (-gy, gx)
            return GridVectorField(np.stack(comps, axis=-1), fld.R)
        if not isinstance(fld, AnalyticScalarField):
            raise DomainError(f"{kind} needs a scalar field")
        if fld.terms is not None and np.all(fld.terms[:, 0] == BUMP):
            t = fld.terms.copy()
            t[:, 0] = GRAD if kind == "grad" else PERP
            t[:, 5] = 0.0
            return AnalyticVectorField(fld.R, terms=t)
        if fld.terms is not None:
            terms = fld.terms

            def grad(x, y):
                gx = np.zeros(np.broadcast(x, y).shape)
                gy = np.zeros_like(gx)
                for row in terms:
                    if int(row[0]) == MODE:
                        a, b = _mode_grad(row, x, y, row[4], row[9])
                    else:
                        _, a, b = bump_and_grad(x - row[1], y - row[2], row[3])
                        a, b = row[4] * a, row[4] * b
                    gx += a
                    gy += b
                return gx, gy
        elif fld.grad_func is not None:
            grad = fld.grad_func
        else:
            raise DomainError("analytic scalar field carries no derivatives")
        if kind == "grad":
            return AnalyticVectorField(fld.R, func=grad, support=fld.support)

        def gperp(x, y):
            gx, gy = grad(x, y)
            return -np.asarray(gy), np.asarray(gx)
        return AnalyticVectorField(fld.R, func=gperp, support=fld.support)

    if kind in ("div", "curl"):
        if isinstance(fld, GridVectorField):
            g1x, g1y = _grid_gradient(fld.f1, fld.R)
            g2x, g2y = _grid_gradient(fld.f2, fld.R)
            return GridScalarField(g1x + g2y if kind == "div" else g2x - g1y, fld.R)
        if not isinstance(fld, AnalyticVectorField):
            raise DomainError(f"{kind} needs a vector field")

        def value(x, y):
            j11, j12, j21, j22 = fld.jacobian(x, y)
            return j11 + j22 if kind == "div" else j21 - j12
        fld.jacobian(np.zeros(1), np.zeros(1))  # fail early when derivatives are missing
        return AnalyticScalarField(fld.R, func=value, support=fld.support)

    raise DomainError(f"unknown operator {kind!r}")


# ---------------------------------------------------------------------------
# phantoms

@dataclass
class BumpTerm:
    """Mollifier bump of radius ``width`` at ``center``.

    ``role`` selects the vector field built from it: ``potential`` gives
    ``amplitude * grad(phi)``, ``solenoidal`` gives ``amplitude *
    grad_perp(phi)`` and ``plain`` gives ``amplitude * phi`` where
    ``amplitude`` is then a 2-vector.
    """

    center: tuple
    width: float
    amplitude: Union[float, tuple] = 1.0
    role: str = "plain"


@dataclass
class ModeTerm:
    """Single angular mode ``n``: ``f_k = amp_k g(r) cos(n phi + phase_k)``.

    ``g`` is a mollifier on the ring ``|r - r0| < width``.  For ``n != 0`` the
    ring must stay off the origin (``r0 >= width``) for the field to be smooth.
    """

    n: int
    r0: float
    width: float
    amp1: float = 1.0
    amp2: float = 0.0
    phase1: float = 0.0
    phase2: float = 0.0


@dataclass
class PhantomSpec:
    kind: str
    terms: list = field(default_factory=list)
    R: float = 1.0
    support_bound: Optional[float] = None

    def to_dict(self):
        return {
            "kind": self.kind, "R": self.R, "support_bound": self.support_bound,
            "terms": [dict(asdict(t), type="bump" if isinstance(t, BumpTerm) else "mode")
                      for t in self.terms],
        }

    @classmethod
    def from_dict(cls, data):
        terms = []
        for t in data.get("terms", []):
            t = dict(t)
            kind = t.pop("type")
            if kind == "bump":
                amp = t.get("amplitude", 1.0)
                t["amplitude"] = tuple(amp) if isinstance(amp, (list, tuple)) else float(amp)
                t["center"] = tuple(t["center"])
                terms.append(BumpTerm(**t))
            elif kind == "mode":
                terms.append(ModeTerm(**t))
            else:
                raise DomainError(f"unknown phantom term type {kind!r}")
        return cls(data["kind"], terms, float(data.get("R", 1.0)), data.get("support_bound"))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


_ROLE_KIND = {"potential": GRAD, "solenoidal": PERP, "plain": BUMP}


def _term_row(term):
    if isinstance(term, BumpTerm):
        if term.width <= 0:
            raise DomainError(f"bump width must be positive, got {term.width}")
        kind = _ROLE_KIND.get(term.role)
        if kind is None:
            raise DomainError(f"unknown bump role {term.role!r}")
        amp = term.amplitude
        if kind == BUMP:
            a1, a2 = (amp, amp) if np.isscalar(amp) else amp
        else:
            if not np.isscalar(amp):
                raise DomainError(f"{term.role} bumps take a scalar amplitude")
            a1, a2 = amp, 0.0
        return [kind, term.center[0], term.center[1], term.width, a1, a2, 0, 0, 0, 0, 0]
    if isinstance(term, ModeTerm):
        if term.width <= 0 or term.r0 < 0:
            raise DomainError("mode ring needs width > 0 and r0 >= 0")
        if term.n != 0 and term.r0 < term.width:
            raise DomainError(f"mode n={term.n} needs r0 >= width so the field is smooth at the origin")
        if term.n == 0 and 0 < term.r0 < term.width:
            raise DomainError("mode ring must either be centered (r0=0) or stay off the origin")
        return [MODE, 0.0, 0.0, term.r0 + term.width, term.amp1, term.amp2, term.r0,
                term.width, term.n, term.phase1, term.phase2]
    raise DomainError(f"unsupported phantom term {term!r}")


def measured_support_radius(fld: VectorField, n_r: int = 400, n_phi: int = 256) -> float:
    """Largest sampled radius where ``|f| > 1e-14`` (polar sampling)."""
    r = np.linspace(0.0, fld.R, n_r)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    rr, pp = np.meshgrid(r, phi)
    f1, f2 = fld.evaluate_polar(pp, rr)
    hit = (np.abs(f1) > SUPPORT_TOL) | (np.abs(f2) > SUPPORT_TOL)
    return float(rr[hit].max()) if hit.any() else 0.0


def make_phantom(spec: PhantomSpec) -> AnalyticVectorField:
    roles = {"potential": "potential", "solenoidal": "solenoidal"}
    if spec.kind not in ("potential", "solenoidal", "angular-mode", "mixture"):
        raise DomainError(f"unknown phantom kind {spec.kind!r}")
    rows = []
    for term in spec.terms:
        if spec.kind in roles:
            if not isinstance(term, BumpTerm):
                raise DomainError(f"{spec.kind} phantoms are built from bumps only")
            term = BumpTerm(term.center, term.width, term.amplitude, roles[spec.kind])
        elif spec.kind == "angular-mode" and not isinstance(term, ModeTerm):
            raise DomainError("angular-mode phantoms are built from mode terms only")
        rows.append(_term_row(term))
    table = np.array(rows, dtype=float).reshape(-1, 11)
    fld = AnalyticVectorField(spec.R, terms=table)
    bound = spec.R if spec.support_bound is None else spec.support_bound
    if fld.support >= bound:
        raise DomainError(
            f"phantom support radius {fld.support:.6g} (measured "
            f"{measured_support_radius(fld):.6g}) is not below the bound {bound:.6g}")
    return fld


def sample_to_grid(fld: VectorField, nx: int, ny: int, R: Optional[float] = None) -> GridVectorField:
    if nx < 3 or ny < 3:
        raise DomainError(f"grid must be at least 3x3, got {nx}x{ny}")
    R = fld.R if R is None else float(R)
    X, Y = grid_points(nx, ny, R)
    f1, f2 = fld(X, Y)
    return GridVectorField(np.stack([f1, f2], axis=-1), R)


def sample_scalar_to_grid(fld: ScalarField, nx: int, ny: int, R: Optional[float] = None) -> GridScalarField:
    if nx < 3 or ny < 3:
        raise DomainError(f"grid must be at least 3x3, got {nx}x{ny}")
    R = fld.R if R is None else float(R)
    X, Y = grid_points(nx, ny, R)
    return GridScalarField(fld(X, Y), R)


def angular_coefficient(fld: VectorField, n: int, r, n_phi: int = 256):
    """``(a_n(r), b_n(r))``: Fourier coefficients of ``f1, f2`` over the polar angle."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    pp, rr = np.meshgrid(phi, r)
    f1, f2 = fld.evaluate_polar(pp, rr)
    e = np.exp(-1j * n * phi) / n_phi
    return f1 @ e, f2 @ e


def mode_profiles(fld: AnalyticVectorField, n: int, r):
    """Exact ``(a_n(r), b_n(r))`` for a field built only from centered ring modes."""
    r = np.asarray(r, dtype=float)
    a = np.zeros(r.shape, dtype=complex)
    b = np.zeros(r.shape, dtype=complex)
    if fld.terms is None:
        raise DomainError("mode profiles need a term table")
    for row in fld.terms:
        if int(row[0]) != MODE or row[1] != 0.0 or row[2] != 0.0:
            raise DomainError("mode profiles need centered ring-mode terms only")
        m = int(row[8])
        g = ring_profile(r, row[6], row[7])
        for amp, ph, out in ((row[4], row[9], a), (row[5], row[10], b)):
            if m == 0 and n == 0:
                out += amp * g * math.cos(ph)
            elif m != 0 and n == m:
                out += 0.5 * amp * g * np.exp(1j * ph)
            elif m != 0 and n == -m:
                out += 0.5 * amp * g * np.exp(-1j * ph)
    return a, b


def random_phantom(rng: np.random.Generator, kind: str = "mixture", n_terms: int = 3,
                   support: float = 0.8, R: float = 1.0) -> AnalyticVectorField:
    """Random smooth phantom whose support stays inside ``support * R``."""
    return make_phantom(random_phantom_spec(rng, kind, n_terms, support, R))


def random_phantom_spec(rng: np.random.Generator, kind: str = "mixture", n_terms: int = 3,
                        support: float = 0.8, R: float = 1.0) -> PhantomSpec:
    if n_terms < 1 or not 0 < support <= 1 or not R > 0:
        raise DomainError("need n_terms >= 1, support in (0, 1] and R > 0")
    terms = []
    for i in range(n_terms):
        if kind == "angular-mode":
            n = int(rng.integers(0, 4))
            w = rng.uniform(0.08, 0.2) * support * R
            r0 = 0.0 if n == 0 and rng.random() < 0.5 else rng.uniform(w, support * R - w - 1e-6)
            terms.append(ModeTerm(n, r0, w, *rng.normal(size=2), *rng.uniform(0, 2 * np.pi, 2)))
            continue
        width = rng.uniform(0.15, 0.35) * support * R
        rad = rng.uniform(0.0, support * R - width - 1e-6)
        ang = rng.uniform(0.0, 2 * np.pi)
        center = (rad * math.cos(ang), rad * math.sin(ang))
        role = kind if kind in ("potential", "solenoidal") else ("potential", "solenoidal", "plain")[i % 3]
        amp = tuple(rng.normal(size=2)) if role == "plain" else float(rng.normal()) * width
        terms.append(BumpTerm(center, width, amp, role))
    return PhantomSpec(kind, terms, R, support_bound=support * R + 1e-9)
