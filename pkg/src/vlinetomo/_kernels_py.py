"""Pure numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` call for call and are used whenever the
compiled extension is unavailable.  See ``kernels.py`` for the term and
segment table layouts.
"""

import math

import numpy as np

BUMP, GRAD, PERP, MODE = 0, 1, 2, 3

# nodes evaluated per vectorized batch; bounds peak memory
_CHUNK_NODES = 1 << 21


def bump_and_grad(dx, dy, rho):
    """Mollifier ``exp(-1/(1-q))``, ``q = |x|^2/rho^2``, with its gradient."""
    q = (dx * dx + dy * dy) / (rho * rho)
    inside = q < 1.0
    om = np.where(inside, 1.0 - q, 1.0)
    phi = np.where(inside, np.exp(-1.0 / om), 0.0)
    dphi_dq = -phi / (om * om)
    gx = dphi_dq * 2.0 * dx / (rho * rho)
    gy = dphi_dq * 2.0 * dy / (rho * rho)
    return phi, gx, gy


def ring_profile(r, r0, w):
    """Radial mollifier centered on the ring ``|r - r0| < w``."""
    z = (r - r0) / w
    q = z * z
    inside = q < 1.0
    om = np.where(inside, 1.0 - q, 1.0)
    return np.where(inside, np.exp(-1.0 / om), 0.0)


def eval_terms(terms, x, y):
    """Evaluate the vector field described by a term table at points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f1 = np.zeros(np.broadcast(x, y).shape)
    f2 = np.zeros_like(f1)
    for row in np.asarray(terms, dtype=float).reshape(-1, 11):
        kind = int(row[0])
        dx = x - row[1]
        dy = y - row[2]
        if kind == MODE:
            r = np.hypot(dx, dy)
            ang = np.arctan2(dy, dx)
            g = ring_profile(r, row[6], row[7])
            n = row[8]
            f1 = f1 + row[4] * g * np.cos(n * ang + row[9])
            f2 = f2 + row[5] * g * np.cos(n * ang + row[10])
            continue
        phi, gx, gy = bump_and_grad(dx, dy, row[3])
        if kind == BUMP:
            f1 = f1 + row[4] * phi
            f2 = f2 + row[5] * phi
        elif kind == GRAD:
            f1 = f1 + row[4] * gx
            f2 = f2 + row[4] * gy
        elif kind == PERP:
            f1 = f1 - row[4] * gy
            f2 = f2 + row[4] * gx
        else:
            raise ValueError(f"unknown term kind {kind}")
    return f1, f2


def _simpson_counts(lengths, step):
    n = np.ceil(lengths / step).astype(np.int64)
    n = np.maximum(n + (n % 2), 2)
    return n


def _simpson_batch(s_lo, s_hi, step, evaluate):
    """Composite Simpson of ``evaluate(seg_idx, s)`` over per-segment intervals.

    Each interval gets its own even node count so its step does not exceed
    ``step``.  Returns one value per interval.
    """
    out = np.zeros(s_lo.shape[0])
    active = np.nonzero(s_hi > s_lo)[0]
    if active.size == 0:
        return out
    counts = _simpson_counts(s_hi[active] - s_lo[active], step)
    ends = np.cumsum(counts + 1)
    start = 0
    while start < active.size:
        base = ends[start - 1] if start else 0
        stop = int(np.searchsorted(ends, base + _CHUNK_NODES, side="right"))
        stop = max(stop, start + 1)
        total = int(ends[stop - 1] - base)
        idx = active[start:stop]
        n = counts[start:stop]
        seg = np.repeat(idx, n + 1)
        offs = np.cumsum(n + 1) - (n + 1)
        k = np.arange(total) - np.repeat(offs, n + 1)
        nk = np.repeat(n, n + 1)
        h = (s_hi[idx] - s_lo[idx]) / n
        hk = np.repeat(h, n + 1)
        s = np.repeat(s_lo[idx], n + 1) + k * hk
        wgt = np.where((k == 0) | (k == nk), 1.0, np.where(k % 2 == 1, 4.0, 2.0)) * hk / 3.0
        vals = evaluate(seg, s) * wgt
        out[idx] = np.add.reduceat(vals, offs)
        start = stop
    return out


def integrate_segments(terms, segs, step):
    terms = np.asarray(terms, dtype=float).reshape(-1, 11)
    segs = np.asarray(segs, dtype=float).reshape(-1, 7)
    total = np.zeros(segs.shape[0])
    x0, y0, ex, ey, length, wx, wy = segs.T
    for row in terms:
        # restrict each segment to the disk carrying this term
        ox = x0 - row[1]
        oy = y0 - row[2]
        b = ox * ex + oy * ey
        c = ox * ox + oy * oy - row[3] * row[3]
        disc = b * b - c
        root = np.sqrt(np.maximum(disc, 0.0))
        s_lo = np.maximum(-b - root, 0.0)
        s_hi = np.minimum(-b + root, length)
        s_hi = np.where(disc > 0.0, s_hi, s_lo)
        single = row[None, :]

        def evaluate(seg, s, single=single):
            f1, f2 = eval_terms(single, x0[seg] + s * ex[seg], y0[seg] + s * ey[seg])
            return wx[seg] * f1 + wy[seg] * f2

        total += _simpson_batch(s_lo, s_hi, step, evaluate)
    return total


def bilinear(grid, R, x, y):
    """Bilinear interpolation of a cell-centered ``(ny, nx, k)`` grid on [-R, R]^2.

    Outside the hull of cell centers the grid is continued by zeros one cell
    out, matching fields that vanish near the boundary.
    """
    ny, nx = grid.shape[:2]
    hx = 2.0 * R / nx
    hy = 2.0 * R / ny
    padded = np.zeros((ny + 2, nx + 2) + grid.shape[2:])
    padded[1:-1, 1:-1] = grid
    fx = (np.asarray(x) + R) / hx + 0.5
    fy = (np.asarray(y) + R) / hy + 0.5
    # snap rounding noise so cell centers return their sample exactly
    fx = np.where(np.abs(fx - np.rint(fx)) < 1e-9, np.rint(fx), fx)
    fy = np.where(np.abs(fy - np.rint(fy)) < 1e-9, np.rint(fy), fy)
    fx = np.clip(fx, 0.0, nx + 1.0)
    fy = np.clip(fy, 0.0, ny + 1.0)
    ix = np.minimum(np.floor(fx).astype(np.int64), nx)
    iy = np.minimum(np.floor(fy).astype(np.int64), ny)
    tx = fx - ix
    ty = fy - iy
    if grid.ndim == 3:
        tx = tx[..., None]
        ty = ty[..., None]
    # lerp form keeps constants exact
    lo = padded[iy, ix] + tx * (padded[iy, ix + 1] - padded[iy, ix])
    hi = padded[iy + 1, ix] + tx * (padded[iy + 1, ix + 1] - padded[iy + 1, ix])
    return lo + ty * (hi - lo)


def integrate_segments_grid(grid, R, segs, step):
    grid = np.ascontiguousarray(grid, dtype=float)
    segs = np.asarray(segs, dtype=float).reshape(-1, 7)
    x0, y0, ex, ey, length, wx, wy = segs.T

    def evaluate(seg, s):
        f = bilinear(grid, R, x0[seg] + s * ex[seg], y0[seg] + s * ey[seg])
        return wx[seg] * f[:, 0] + wy[seg] * f[:, 1]

    return _simpson_batch(np.zeros_like(length), length, step, evaluate)


def backproject(q, psi, p0, dp, xs, ys):
    q = np.asarray(q, dtype=float)
    n_views, n_p = q.shape
    X, Y = np.meshgrid(np.asarray(xs, float), np.asarray(ys, float))
    img = np.zeros(X.shape)
    for k in range(n_views):
        pos = (X * math.cos(psi[k]) + (Y * math.sin(psi[k]) - p0)) / dp
        valid = (pos >= 0.0) & (pos <= n_p - 1)
        i = np.clip(np.floor(pos).astype(np.int64), 0, n_p - 2)
        frac = pos - i
        val = (1.0 - frac) * q[k, i] + frac * q[k, i + 1]
        img += np.where(valid, val, 0.0)
    return img
