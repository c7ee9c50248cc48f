"""Broken rays in the disk and the straight lines they induce.

A broken ray ``BR(beta, d)`` enters the disk of radius ``R`` at
``x = R (cos beta, sin beta)``, travels a distance ``d`` towards the center
along ``u = -(cos beta, sin beta)`` and then turns onto
``v = -(cos(beta + theta), sin(beta + theta))``.  Fields are supported in
the disk, so the second leg is cut where it leaves the disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Map an angle to ``[0, 2*pi)``; values that round to ``2*pi`` map to 0."""
    a = math.fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a >= TWO_PI:
        a = 0.0
    return a


def _check_ray_params(d, R, theta):
    if not R > 0.0:
        raise DomainError(f"R must be positive, got R={R!r}")
    if not 0.0 < theta < 0.5 * math.pi:
        raise DomainError(f"theta must lie in (0, pi/2), got theta={theta!r}")
    if not 0.0 <= d <= 2.0 * R:
        raise DomainError(f"d must lie in [0, 2R] = [0, {2.0 * R}], got d={d!r}")


@dataclass(frozen=True)
class BrokenRay:
    beta: float
    d: float
    R: float
    theta: float
    base: np.ndarray
    u: np.ndarray
    v: np.ndarray
    vertex: np.ndarray
    second_leg_exit: float

    @property
    def u_perp(self) -> np.ndarray:
        return np.array([-self.u[1], self.u[0]])

    @property
    def v_perp(self) -> np.ndarray:
        return np.array([-self.v[1], self.v[0]])

    def point(self, s: float) -> np.ndarray:
        """Point at arc length ``s`` measured from the base along both legs."""
        if s <= self.d:
            return self.base + s * self.u
        return self.vertex + (s - self.d) * self.v


@dataclass(frozen=True)
class LineParams:
    """The line ``{x : x . w = p}`` with ``w = (cos psi, sin psi)``."""

    psi: float
    p: float

    @property
    def w(self) -> np.ndarray:
        return np.array([math.cos(self.psi), math.sin(self.psi)])

    @property
    def w_perp(self) -> np.ndarray:
        return np.array([-math.sin(self.psi), math.cos(self.psi)])


def chord_exit_distance(point, direction, R: float) -> float:
    """Smallest ``s >= 0`` with ``|point + s*direction| = R``.

    ``direction`` must be a unit vector.  A boundary point whose direction
    points outward yields 0.
    """
    x = np.asarray(point, dtype=float)
    e = np.asarray(direction, dtype=float)
    rr = float(x @ x)
    if rr > (R + 1e-12) ** 2:
        raise DomainError(f"point {x.tolist()} lies outside the disk of radius {R}")
    b = float(x @ e)
    disc = b * b - (rr - R * R)
    return max(0.0, -b + math.sqrt(max(disc, 0.0)))


def make_broken_ray(beta: float, d: float, R: float, theta: float) -> BrokenRay:
    _check_ray_params(d, R, theta)
    beta = normalize_angle(beta)
    cb, sb = math.cos(beta), math.sin(beta)
    base = np.array([R * cb, R * sb])
    u = np.array([-cb, -sb])
    v = np.array([-math.cos(beta + theta), -math.sin(beta + theta)])
    vertex = (R - d) * np.array([cb, sb])
    exit_ = chord_exit_distance(vertex, v, R)
    return BrokenRay(beta, float(d), float(R), float(theta), base, u, v, vertex, exit_)


def second_leg_line(beta: float, d: float, R: float, theta: float) -> LineParams:
    """Line carrying the second leg, oriented so that ``w_perp`` equals ``v``."""
    _check_ray_params(d, R, theta)
    psi = normalize_angle(beta + theta + 0.5 * math.pi)
    return LineParams(psi, (d - R) * math.sin(theta))


def second_leg_exit(beta, d, R, theta):
    """Vectorized second-leg exit distance ``(R - d) cos(theta) + sqrt(...)``.

    The vertex is ``(R - d)(cos beta, sin beta)`` and ``v . vertex / (R - d)
    = -cos(theta)``, so the chord solve reduces to a closed form.
    """
    t = R - np.asarray(d, dtype=float)
    b = -t * math.cos(theta)
    disc = np.maximum(R * R - (t * math.sin(theta)) ** 2, 0.0)
    out = np.maximum(-b + np.sqrt(disc), 0.0)
    return np.broadcast_to(out, np.broadcast(np.asarray(beta), t).shape).copy()
