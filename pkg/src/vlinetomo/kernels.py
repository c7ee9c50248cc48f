"""Hot-kernel dispatch: compiled extension when built, numpy otherwise.

Term table, one row per analytic primitive (float64, 11 columns)::

    kind, cx, cy, rho, a1, a2, r0, w, n, alpha1, alpha2

``kind`` is 0 (bump ``(a1, a2) phi``), 1 (``a1 grad phi``), 2
(``a1 grad_perp phi``) or 3 (ring mode ``a_k g(r) cos(n ang + alpha_k)``).
``rho`` is the support radius about ``(cx, cy)``.

Segment table, one row per straight segment (float64, 7 columns)::

    x0, y0, ex, ey, length, wx, wy

The kernels integrate ``(wx, wy) . f(x0 + s e)`` over ``s in [0, length]``.

Set ``VLINETOMO_PURE_PYTHON=1`` to force the numpy path.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("VLINETOMO_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def integrate_segments(terms, segs, step, impl=None):
    impl = impl or _impl
    terms = np.ascontiguousarray(terms, dtype=float).reshape(-1, 11)
    segs = np.ascontiguousarray(segs, dtype=float).reshape(-1, 7)
    return np.asarray(impl.integrate_segments(terms, segs, float(step)))


def integrate_segments_grid(grid, R, segs, step, impl=None):
    impl = impl or _impl
    grid = np.ascontiguousarray(grid, dtype=float)
    segs = np.ascontiguousarray(segs, dtype=float).reshape(-1, 7)
    return np.asarray(impl.integrate_segments_grid(grid, float(R), segs, float(step)))


def backproject(q, psi, p0, dp, xs, ys, impl=None):
    impl = impl or _impl
    return np.asarray(impl.backproject(
        np.ascontiguousarray(q, dtype=float), np.ascontiguousarray(psi, dtype=float),
        float(p0), float(dp), np.ascontiguousarray(xs, dtype=float),
        np.ascontiguousarray(ys, dtype=float)))


eval_terms = _kernels_py.eval_terms
bilinear = _kernels_py.bilinear
