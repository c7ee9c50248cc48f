"""Desk-scale invariant checks behind ``vlinetomo selftest``.

Each check returns a :class:`CheckResult` carrying the measured quantity and
the tolerance it was held to.  The acceptance tests call the same functions.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import io
from .errors import FormatError
from .fields import GridVectorField, random_phantom
from .forward import VSinogram, simulate_vsinograms, straight_line_transform, vline_transform
from .geometry import TWO_PI, make_broken_ray, second_leg_line
from .mellin import MellinSamples, contour_omegas, inverse_mellin, mellin_numeric


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    seconds: float = 0.0
    limit: float = math.inf

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol and self.seconds < self.limit)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.value:.3e} (tol {self.tol:.1e}), {self.seconds:.2f} s (limit {self.limit:g} s)"


def _timed(fn):
    t0 = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - t0


def check_geometry(seed: int = 0, count: int = 1000) -> CheckResult:
    """Second-leg line parameters against the distance from the origin to the
    line through the vertex along ``v``."""
    rng = np.random.default_rng(seed)
    R = 1.0

    def run():
        worst = 0.0
        for _ in range(count):
            beta = rng.uniform(0, TWO_PI)
            d = rng.uniform(0, 2 * R)
            theta = rng.uniform(1e-3, 0.5 * math.pi - 1e-3)
            ray = make_broken_ray(beta, d, R, theta)
            line = second_leg_line(beta, d, R, theta)
            vx, vy = ray.v
            nx, ny = vy, -vx
            p_or = ray.vertex[0] * nx + ray.vertex[1] * ny
            dpsi = abs(math.remainder(line.psi - math.atan2(ny, nx), TWO_PI))
            worst = max(worst, dpsi, abs(line.p - p_or))
        return worst
    worst, secs = _timed(run)
    return CheckResult("geometry: second-leg (psi, p) vs point-line distance", worst, 1e-12, secs, 1.0)


def _phantoms(seed, kinds=("mixture", "solenoidal", "angular-mode")):
    # gradients would make L vanish identically, leaving nothing to compare
    rng = np.random.default_rng(seed)
    return [random_phantom(rng, k, 3, 0.8) for k in kinds]


def check_diameter_identity(seed: int = 1, count: int = 100) -> CheckResult:
    """``L f(beta, 2R) = I f(beta + pi/2, 0)``."""
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for fld in _phantoms(seed):
            beta = rng.uniform(0, TWO_PI, count)
            theta = rng.uniform(0.1, 1.4)
            lv = vline_transform("longitudinal", fld, beta, 2 * fld.R, theta)
            iv = straight_line_transform("longitudinal_ray", fld, beta + 0.5 * math.pi, 0.0)
            worst = max(worst, np.max(np.abs(lv - iv)) / np.max(np.abs(iv)))
        return worst
    worst, secs = _timed(run)
    return CheckResult("diameter identity L(beta,2R) = I(beta+pi/2,0)", worst, 1e-6, secs, 30.0)


def combination_deviation(fld, beta, d, theta):
    """Deviation of both combination formulas from direct straight-line data,
    relative to the largest magnitude involved."""
    R = fld.R
    psi = beta + theta + 0.5 * math.pi
    p = (d - R) * math.sin(theta)
    worst = 0.0
    for kind, line_kind, sign in (("longitudinal", "longitudinal_ray", 1.0),
                                  ("transverse", "transverse_ray", -1.0)):
        a = vline_transform(kind, fld, beta, d, theta)
        b = vline_transform(kind, fld, beta + math.pi, 2 * R - d, theta)
        c = vline_transform(kind, fld, beta, 2 * R, theta)
        combo = sign * (a - b - c)
        ref = straight_line_transform(line_kind, fld, psi, p)
        scale = max(np.max(np.abs(v)) for v in (a, b, c, ref))
        worst = max(worst, np.max(np.abs(combo - ref)) / scale)
    return worst


def check_combination(seed: int = 2, count: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    fld = random_phantom(rng, "mixture", 4, 0.8)

    def run():
        beta = rng.uniform(0, TWO_PI, count)
        d = rng.uniform(0, 2 * fld.R, count)
        return combination_deviation(fld, beta, d, rng.uniform(0.1, 1.4))
    worst, secs = _timed(run)
    return CheckResult("combination formulas vs straight-line transforms", worst, 1e-6, secs, 120.0)


def _sup_norm(fld, n=201):
    x = np.linspace(-fld.R, fld.R, n)
    X, Y = np.meshgrid(x, x)
    f1, f2 = fld(X, Y)
    return float(np.max(np.hypot(f1, f2)))


def check_annihilation(seed: int = 3, n_beta: int = 128, n_d: int = 129) -> CheckResult:
    """``L`` kills gradients and ``T`` kills perpendicular gradients."""
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for kind, idx in (("potential", 0), ("solenoidal", 1)):
            fld = random_phantom(rng, kind, 3, 0.8)
            sinos = simulate_vsinograms(fld, rng.uniform(0.2, 1.3), n_beta, n_d)
            worst = max(worst, np.max(np.abs(sinos[idx].values)) / (_sup_norm(fld) * fld.R))
        return worst
    worst, secs = _timed(run)
    return CheckResult("annihilation of potential / solenoidal parts", worst, 1e-7, secs, 120.0)


def _poly_profile(rng):
    """Random ``P(p) = (1-p)^3 q(p)`` on ``[0, 1]`` with its tail integral."""
    q = np.polynomial.Polynomial(rng.normal(size=4))
    P = np.polynomial.Polynomial([1.0, -1.0]) ** 3 * q
    Q = P.integ()
    return (lambda p: np.where(p <= 1, P(p), 0.0)), (lambda t: np.where(t <= 1, Q(1.0) - Q(t), 0.0))


def check_mellin(seed: int = 4) -> CheckResult:
    """Gamma calibration, properties 1-2 and the inverse round trip; the
    reported value is the worst ratio of error to its own tolerance."""
    rng = np.random.default_rng(seed)

    def run():
        ratios = []
        g = mellin_numeric(lambda p: np.exp(-p), 2.0, r_max=40.0)
        ratios.append(abs(g - 1.0) / 1e-6)
        s = 1.0 + rng.uniform(0.2, 2.0, 16) + 1j * rng.uniform(-20, 20, 16)
        for _ in range(3):
            f, tail = _poly_profile(rng)
            k = int(rng.integers(1, 4))
            lhs = mellin_numeric(lambda p: p ** k * f(p), s, r_max=1.0)
            rhs = mellin_numeric(f, s + k, r_max=1.0)
            ratios.append(np.max(np.abs(lhs - rhs)) / 1e-8)
            lhs = mellin_numeric(tail, s, r_max=1.0)
            rhs = mellin_numeric(f, s + 1, r_max=1.0) / s
            ratios.append(np.max(np.abs(lhs - rhs)) / 1e-6)
        omega = contour_omegas(200.0, 0.05)
        M = MellinSamples(2.0, omega, mellin_numeric(lambda p: np.exp(-p), 2.0 + 1j * omega, r_max=40.0))
        r = np.linspace(0.1, 3.0, 59)
        ratios.append(np.max(np.abs(inverse_mellin(M, r) - np.exp(-r))) / 1e-3)
        return max(ratios)
    worst, secs = _timed(run)
    return CheckResult("Mellin calibration, properties 1-2, inverse round trip (error/tol)", worst, 1.0, secs, 30.0)


def _random_vsin(rng):
    R = float(rng.uniform(0.1, 10.0))
    d_max = float(rng.uniform(0.5, 2.0)) * R
    return VSinogram(("longitudinal", "transverse")[int(rng.integers(0, 2))], R,
                     float(rng.uniform(0.01, 1.5)), 0.0, d_max,
                     rng.normal(size=(int(rng.integers(2, 40)), int(rng.integers(2, 40)))))


def check_formats(seed: int = 5, count: int = 100) -> CheckResult:
    """Bit-exact write/read/write and guaranteed detection of truncation; the
    value counts failures."""
    rng = np.random.default_rng(seed)

    def run():
        failures = 0
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "x")
            for i in range(count):
                if i % 2:
                    obj = _random_vsin(rng)
                    write, read, parse = io.write_vsin, io.read_vsin, io.parse_vsin
                else:
                    shape = (int(rng.integers(1, 30)), int(rng.integers(1, 30)), 2)
                    obj = GridVectorField(rng.normal(size=shape), float(rng.uniform(0.1, 5)))
                    write, read, parse = io.write_vfld, io.read_vfld, io.parse_vfld
                write(path, obj)
                with open(path, "rb") as fh:
                    first = fh.read()
                write(path + "2", read(path))
                with open(path + "2", "rb") as fh:
                    failures += fh.read() != first
                cut = int(rng.integers(0, len(first)))
                try:
                    parse(first[:cut])
                    failures += 1
                except FormatError:
                    pass
        return float(failures)
    fails, secs = _timed(run)
    return CheckResult("VSIN/VFLD bit-exact round trips and truncation detection (failures)", fails, 0.0,
                       secs, 5.0)


CHECKS = (check_geometry, check_diameter_identity, check_combination, check_annihilation,
          check_mellin, check_formats)


def run_selftest(out=print) -> bool:
    ok = True
    for check in CHECKS:
        res = check()
        out(res.line())
        ok &= res.passed
    out("selftest " + ("passed" if ok else "FAILED"))
    return ok
