# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_kernels_py``.

Every function releases the GIL around its loop so callers may split work
across threads.
"""

import numpy as np
from libc.math cimport exp, sqrt, ceil, floor, cos, sin, atan2, hypot, fabs, round

DEF BUMP = 0
DEF GRAD = 1
DEF PERP = 2
DEF MODE = 3


cdef inline void _term_value(const double[:] t, double x, double y,
                             double* f1, double* f2) noexcept nogil:
    cdef int kind = <int>t[0]
    cdef double dx = x - t[1]
    cdef double dy = y - t[2]
    cdef double q, om, phi, dq, gx, gy, r, z, g, ang
    f1[0] = 0.0
    f2[0] = 0.0
    if kind == MODE:
        r = hypot(dx, dy)
        z = (r - t[6]) / t[7]
        q = z * z
        if q >= 1.0:
            return
        g = exp(-1.0 / (1.0 - q))
        ang = atan2(dy, dx)
        f1[0] = t[4] * g * cos(t[8] * ang + t[9])
        f2[0] = t[5] * g * cos(t[8] * ang + t[10])
        return
    q = (dx * dx + dy * dy) / (t[3] * t[3])
    if q >= 1.0:
        return
    om = 1.0 - q
    phi = exp(-1.0 / om)
    if kind == BUMP:
        f1[0] = t[4] * phi
        f2[0] = t[5] * phi
        return
    dq = -phi / (om * om) * 2.0 / (t[3] * t[3])
    gx = dq * dx
    gy = dq * dy
    if kind == GRAD:
        f1[0] = t[4] * gx
        f2[0] = t[4] * gy
    else:
        f1[0] = -t[4] * gy
        f2[0] = t[4] * gx


def integrate_segments(double[:, ::1] terms, double[:, ::1] segs, double step):
    cdef Py_ssize_t n_seg = segs.shape[0]
    cdef Py_ssize_t n_terms = terms.shape[0]
    out_arr = np.zeros(n_seg)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k, n
    cdef double x0, y0, ex, ey, length, wx, wy
    cdef double ox, oy, b, c, disc, root, s_lo, s_hi, h, s, acc, wk, f1, f2
    with nogil:
        for i in range(n_seg):
            x0 = segs[i, 0]; y0 = segs[i, 1]; ex = segs[i, 2]; ey = segs[i, 3]
            length = segs[i, 4]; wx = segs[i, 5]; wy = segs[i, 6]
            acc = 0.0
            for j in range(n_terms):
                ox = x0 - terms[j, 1]
                oy = y0 - terms[j, 2]
                b = ox * ex + oy * ey
                c = ox * ox + oy * oy - terms[j, 3] * terms[j, 3]
                disc = b * b - c
                if disc <= 0.0:
                    continue
                root = sqrt(disc)
                s_lo = -b - root
                s_hi = -b + root
                if s_lo < 0.0:
                    s_lo = 0.0
                if s_hi > length:
                    s_hi = length
                if s_hi <= s_lo:
                    continue
                n = <Py_ssize_t>ceil((s_hi - s_lo) / step)
                if n % 2 == 1:
                    n += 1
                if n < 2:
                    n = 2
                h = (s_hi - s_lo) / n
                for k in range(n + 1):
                    s = s_lo + k * h
                    _term_value(terms[j], x0 + s * ex, y0 + s * ey, &f1, &f2)
                    if k == 0 or k == n:
                        wk = 1.0
                    elif k % 2 == 1:
                        wk = 4.0
                    else:
                        wk = 2.0
                    acc += wk * h / 3.0 * (wx * f1 + wy * f2)
            out[i] = acc
    return out_arr


cdef inline double _bilinear(const double[:, :, ::1] g, Py_ssize_t ny, Py_ssize_t nx,
                             double hx, double hy, double R, double x, double y,
                             int comp) noexcept nogil:
    # zero continuation one cell beyond the hull of cell centers
    cdef double fx = (x + R) / hx - 0.5
    cdef double fy = (y + R) / hy - 0.5
    if fabs(fx - round(fx)) < 1e-9:
        fx = round(fx)
    if fabs(fy - round(fy)) < 1e-9:
        fy = round(fy)
    if fx < -1.0 or fy < -1.0 or fx > nx or fy > ny:
        return 0.0
    cdef Py_ssize_t ix = <Py_ssize_t>floor(fx)
    cdef Py_ssize_t iy = <Py_ssize_t>floor(fy)
    cdef double tx = fx - ix
    cdef double ty = fy - iy
    cdef double v00 = 0.0, v01 = 0.0, v10 = 0.0, v11 = 0.0
    if 0 <= iy < ny:
        if 0 <= ix < nx:
            v00 = g[iy, ix, comp]
        if 0 <= ix + 1 < nx:
            v01 = g[iy, ix + 1, comp]
    if 0 <= iy + 1 < ny:
        if 0 <= ix < nx:
            v10 = g[iy + 1, ix, comp]
        if 0 <= ix + 1 < nx:
            v11 = g[iy + 1, ix + 1, comp]
    cdef double lo = v00 + tx * (v01 - v00)
    cdef double hi = v10 + tx * (v11 - v10)
    return lo + ty * (hi - lo)


def integrate_segments_grid(double[:, :, ::1] grid, double R, double[:, ::1] segs, double step):
    cdef Py_ssize_t ny = grid.shape[0]
    cdef Py_ssize_t nx = grid.shape[1]
    cdef double hx = 2.0 * R / nx
    cdef double hy = 2.0 * R / ny
    cdef Py_ssize_t n_seg = segs.shape[0]
    out_arr = np.zeros(n_seg)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k, n
    cdef double x0, y0, ex, ey, length, wx, wy, h, s, acc, wk, px, py
    with nogil:
        for i in range(n_seg):
            x0 = segs[i, 0]; y0 = segs[i, 1]; ex = segs[i, 2]; ey = segs[i, 3]
            length = segs[i, 4]; wx = segs[i, 5]; wy = segs[i, 6]
            if length <= 0.0:
                out[i] = 0.0
                continue
            n = <Py_ssize_t>ceil(length / step)
            if n % 2 == 1:
                n += 1
            if n < 2:
                n = 2
            h = length / n
            acc = 0.0
            for k in range(n + 1):
                s = k * h
                px = x0 + s * ex
                py = y0 + s * ey
                if k == 0 or k == n:
                    wk = 1.0
                elif k % 2 == 1:
                    wk = 4.0
                else:
                    wk = 2.0
                acc += wk * (wx * _bilinear(grid, ny, nx, hx, hy, R, px, py, 0)
                             + wy * _bilinear(grid, ny, nx, hx, hy, R, px, py, 1))
            out[i] = acc * h / 3.0
    return out_arr


def backproject(double[:, ::1] q, double[::1] psi, double p0, double dp,
                double[::1] xs, double[::1] ys):
    cdef Py_ssize_t n_views = q.shape[0]
    cdef Py_ssize_t n_p = q.shape[1]
    cdef Py_ssize_t nx = xs.shape[0]
    cdef Py_ssize_t ny = ys.shape[0]
    img_arr = np.zeros((ny, nx))
    cdef double[:, ::1] img = img_arr
    cdef Py_ssize_t k, ix, iy, i
    cdef double c, s, pos, frac, rowbase
    with nogil:
        for k in range(n_views):
            c = cos(psi[k])
            s = sin(psi[k])
            for iy in range(ny):
                rowbase = ys[iy] * s - p0
                for ix in range(nx):
                    pos = (xs[ix] * c + rowbase) / dp
                    if pos < 0.0 or pos > n_p - 1:
                        continue
                    i = <Py_ssize_t>floor(pos)
                    if i > n_p - 2:
                        i = n_p - 2
                    frac = pos - i
                    img[iy, ix] += (1.0 - frac) * q[k, i] + frac * q[k, i + 1]
    return img_arr
