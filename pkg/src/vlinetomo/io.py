"""Binary sinogram/field files, PGM output, error metrics and seeded noise.

All binary formats are little-endian.

VSIN (56-byte header, then ``n_beta * n_d`` float64 values, beta-major)::

    0  magic  b"VSIN"       4  u32 version = 1    8  u8 kind (0 = L, 1 = T)
    9  7 zero pad bytes    16  f64 R             24  f64 theta
    32 u32 n_beta          36  u32 n_d           40  f64 d_min      48  f64 d_max

VFLD (24-byte header, then ``ny * nx`` pairs ``(f1, f2)`` of float64,
row-major with ``y`` the slow axis)::

    0  magic  b"VFLD"       4  u32 version = 1    8  f64 R    16  u32 nx    20  u32 ny
"""

from __future__ import annotations

import math
import os
import struct

import numpy as np

from .errors import DomainError, FormatError
from .fields import GridVectorField
from .forward import VSinogram

VERSION = 1
_VSIN = struct.Struct("<4sIB7sddIIdd")
_VFLD = struct.Struct("<4sIdII")
_KINDS = ("longitudinal", "transverse")
_F64 = np.dtype("<f8")


def _write_atomic(path, blob: bytes):
    tmp = f"{path}.part"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def vsin_bytes(sino: VSinogram) -> bytes:
    head = _VSIN.pack(b"VSIN", VERSION, _KINDS.index(sino.kind), bytes(7), sino.R, sino.theta,
                      sino.n_beta, sino.n_d, sino.d_min, sino.d_max)
    return head + np.ascontiguousarray(sino.values, dtype=_F64).tobytes()


def parse_vsin(blob: bytes) -> VSinogram:
    if len(blob) < _VSIN.size:
        raise FormatError(f"VSIN header needs {_VSIN.size} bytes, file has {len(blob)}", len(blob))
    magic, version, kind, pad, R, theta, nb, nd, d_min, d_max = _VSIN.unpack_from(blob)
    if magic != b"VSIN":
        raise FormatError(f"bad magic {magic!r}, expected b'VSIN'", 0)
    if version != VERSION:
        raise FormatError(f"unsupported VSIN version {version}", 4)
    if kind > 1:
        raise FormatError(f"kind byte must be 0 or 1, got {kind}", 8)
    if pad != bytes(7):
        raise FormatError("nonzero padding", 9)
    expected = _VSIN.size + 8 * nb * nd
    if len(blob) != expected:
        raise FormatError(f"VSIN with {nb}x{nd} values needs {expected} bytes, file has {len(blob)}",
                          min(len(blob), expected))
    vals = np.frombuffer(blob, dtype=_F64, offset=_VSIN.size).reshape(nb, nd).astype(float)
    try:
        return VSinogram(_KINDS[kind], R, theta, d_min, d_max, vals)
    except DomainError as exc:
        raise FormatError(f"inconsistent VSIN header: {exc}", 16) from exc


def write_vsin(path, sino: VSinogram):
    _write_atomic(path, vsin_bytes(sino))


def read_vsin(path) -> VSinogram:
    with open(path, "rb") as fh:
        return parse_vsin(fh.read())


def vfld_bytes(fld: GridVectorField) -> bytes:
    ny, nx = fld.values.shape[:2]
    return _VFLD.pack(b"VFLD", VERSION, fld.R, nx, ny) + np.ascontiguousarray(fld.values, dtype=_F64).tobytes()


def parse_vfld(blob: bytes) -> GridVectorField:
    if len(blob) < _VFLD.size:
        raise FormatError(f"VFLD header needs {_VFLD.size} bytes, file has {len(blob)}", len(blob))
    magic, version, R, nx, ny = _VFLD.unpack_from(blob)
    if magic != b"VFLD":
        raise FormatError(f"bad magic {magic!r}, expected b'VFLD'", 0)
    if version != VERSION:
        raise FormatError(f"unsupported VFLD version {version}", 4)
    expected = _VFLD.size + 16 * nx * ny
    if len(blob) != expected:
        raise FormatError(f"VFLD with {nx}x{ny} pixels needs {expected} bytes, file has {len(blob)}",
                          min(len(blob), expected))
    if not (R > 0 and math.isfinite(R)):
        raise FormatError(f"radius must be positive, got {R}", 8)
    vals = np.frombuffer(blob, dtype=_F64, offset=_VFLD.size).reshape(ny, nx, 2).astype(float)
    return GridVectorField(vals, R)


def write_vfld(path, fld: GridVectorField):
    _write_atomic(path, vfld_bytes(fld))


def read_vfld(path) -> GridVectorField:
    with open(path, "rb") as fh:
        return parse_vfld(fh.read())


def to_gray(values) -> np.ndarray:
    """Min-max scale to 0..255; a constant image maps to 128."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise DomainError("cannot render empty or non-finite data")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.full(v.shape, 128, dtype=np.uint8)
    return np.rint((v - lo) * (255.0 / (hi - lo))).astype(np.uint8)


def pgm_bytes(pixels) -> bytes:
    img = np.asarray(pixels)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise DomainError("PGM needs a 2-D uint8 image")
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def parse_pgm(blob: bytes) -> np.ndarray:
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header", pos)
        tokens.append((blob[start:pos], start))
    if tokens[0][0] != b"P5":
        raise FormatError(f"bad magic {tokens[0][0]!r}, expected b'P5'", 0)
    try:
        w, h, maxval = (int(tok) for tok, _ in tokens[1:])
    except ValueError as exc:
        raise FormatError("non-numeric PGM header field", tokens[1][1]) from exc
    if maxval != 255:
        raise FormatError(f"only 8-bit PGM is supported, maxval {maxval}", tokens[3][1])
    pos += 1
    if len(blob) != pos + w * h:
        raise FormatError(f"PGM {w}x{h} needs {pos + w * h} bytes, file has {len(blob)}",
                          min(len(blob), pos + w * h))
    return np.frombuffer(blob, dtype=np.uint8, offset=pos).reshape(h, w).copy()


def write_pgm(path, pixels):
    _write_atomic(path, pgm_bytes(pixels))


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def compare_metrics(test, reference, mask=None):
    """``(rel_l2, max_abs)`` of ``test - reference``; ``rel_l2`` is relative to
    the reference norm (absolute if the reference is zero)."""
    a = np.asarray(test, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = a - b
    if mask is not None:
        diff, b = diff[mask], b[mask]
    ref = np.linalg.norm(b)
    err = np.linalg.norm(diff)
    return (err / ref if ref > 0 else err), float(np.max(np.abs(diff), initial=0.0))


def disk_mask(nx, ny, R, radius):
    from .fields import cell_centers
    X, Y = np.meshgrid(cell_centers(nx, R), cell_centers(ny, R))
    return np.hypot(X, Y) <= radius


class SplitMix64:
    """SplitMix64 (Steele, Lea, Flood 2014): state += 0x9E3779B97F4A7C15, then
    two xor-shift-multiply rounds with 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB."""

    _GAMMA = np.uint64(0x9E3779B97F4A7C15)
    _M1 = np.uint64(0xBF58476D1CE4E5B9)
    _M2 = np.uint64(0x94D049BB133111EB)

    def __init__(self, seed: int):
        self.state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)

    def next_u64(self, n: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            k = np.arange(1, n + 1, dtype=np.uint64)
            z = self.state + k * self._GAMMA
            self.state = self.state + np.uint64(n) * self._GAMMA
            z = (z ^ (z >> np.uint64(30))) * self._M1
            z = (z ^ (z >> np.uint64(27))) * self._M2
            return z ^ (z >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in ``(0, 1)`` from the top 53 bits."""
        return ((self.next_u64(n) >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53

    def normal(self, n: int) -> np.ndarray:
        """Box-Muller on consecutive uniform pairs, cosine branch only."""
        u = self.uniform(2 * n).reshape(n, 2)
        return np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(2.0 * math.pi * u[:, 1])


def add_noise(values, sigma: float, seed: int) -> np.ndarray:
    if sigma < 0:
        raise DomainError(f"noise level must be non-negative, got {sigma}")
    v = np.asarray(values, dtype=float)
    if sigma == 0:
        return v.copy()
    return v + sigma * SplitMix64(seed).normal(v.size).reshape(v.shape)
