"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numeric
failure.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings

import numpy as np

from . import io
from .errors import DomainError, FormatError, NumericError
from .fields import GridVectorField, PhantomSpec, make_phantom, random_phantom_spec, sample_to_grid
from .forward import simulate_vsinograms
from .mellin import DEFAULT_C, DEFAULT_D_OMEGA, DEFAULT_OMEGA_MAX

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _positive(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def _nonneg(text):
    v = float(text)
    if not v >= 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a non-negative number, got {text}")
    return v


def _angle(text):
    v = float(text)
    if not 0 < v < 0.5 * math.pi:
        raise argparse.ArgumentTypeError(f"theta must lie in (0, pi/2), got {text}")
    return v


def _sidecar(path):
    return path.rsplit(".", 1)[0] + ".json" if path.endswith(".vfld") else path + ".json"


def _load_field(path, nx=None, ny=None):
    """A phantom spec (``.json``, exact) or a sampled field (``.vfld``)."""
    if path.endswith(".json"):
        with open(path) as fh:
            try:
                spec = PhantomSpec.from_json(fh.read())
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"bad phantom spec {path}: {exc}") from exc
        return make_phantom(spec)
    return io.read_vfld(path)


def _read_any(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] == b"VSIN":
        return io.parse_vsin(blob)
    if blob[:4] == b"VFLD":
        return io.parse_vfld(blob)
    raise FormatError(f"{path}: unknown magic {blob[:4]!r}", 0)


def cmd_phantom(args):
    rng = np.random.default_rng(args.seed)
    spec = random_phantom_spec(rng, args.kind, args.n_terms, args.support, args.R)
    fld = make_phantom(spec)
    io.write_vfld(args.output, sample_to_grid(fld, args.nx, args.ny))
    with open(_sidecar(args.output), "w") as fh:
        fh.write(spec.to_json())
    print(f"wrote {args.output} and {_sidecar(args.output)} (support {fld.support:.4g})")


def cmd_forward(args):
    fld = _load_field(args.input)
    d_range = (0.0, fld.R) if args.partial else (0.0, 2.0 * fld.R)
    L, T = simulate_vsinograms(fld, args.theta, args.n_beta, args.n_d, d_range, args.quad_step,
                               args.workers)
    if args.noise > 0:
        L = L.with_values(io.add_noise(L.values, args.noise, args.seed))
        T = T.with_values(io.add_noise(T.values, args.noise, args.seed + 1))
    io.write_vsin(f"{args.output}_L.vsin", L)
    io.write_vsin(f"{args.output}_T.vsin", T)
    print(f"wrote {args.output}_L.vsin and {args.output}_T.vsin")


def _report_warnings(caught):
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)


def cmd_recon_full(args):
    from .recon_radon import reconstruct_full
    L, T = io.read_vsin(args.L), io.read_vsin(args.T)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fld = reconstruct_full(L, T, args.nx, args.ny)
    _report_warnings(caught)
    io.write_vfld(args.output, fld)
    print(f"wrote {args.output}")


def cmd_recon_partial(args):
    from .recon_mellin import profiles_csv_rows, reconstruct_partial
    L, T = io.read_vsin(args.L), io.read_vsin(args.T)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = reconstruct_partial(L, T, args.N, args.nx, args.ny, method=args.method, c=args.c,
                                  omega_max=args.omega_max, d_omega=args.d_omega, workers=args.workers)
    _report_warnings(caught)
    io.write_vfld(args.output, res.field)
    if args.profiles:
        with open(args.profiles, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["n", "r", "re_a", "im_a", "re_b", "im_b"])
            out.writerows(profiles_csv_rows(res.a, res.b))
    flagged = {n: k for n, k in res.regularized.items() if k}
    print(f"wrote {args.output}; imaginary residual {res.imag_residual:.2e}; "
          f"regularized samples {json.dumps(flagged) if flagged else 'none'}")


def cmd_compare(args):
    a, b = _read_any(args.test), _read_any(args.reference)
    if type(a) is not type(b):
        raise FormatError("cannot compare a sinogram with a field")
    mask = None
    if args.radius is not None:
        if not isinstance(a, GridVectorField):
            raise DomainError("--radius applies to fields only")
        ny, nx = a.values.shape[:2]
        mask = io.disk_mask(nx, ny, a.R, args.radius * a.R)
    rel, mx = io.compare_metrics(a.values, b.values, mask)
    print(f"{args.label},{rel:.9e},{mx:.9e}")


def cmd_render(args):
    obj = _read_any(args.input)
    if isinstance(obj, GridVectorField):
        comp = {"f1": obj.f1, "f2": obj.f2, "magnitude": np.hypot(obj.f1, obj.f2)}[args.component]
        img = comp[::-1]  # first image row is the top (largest y)
    else:
        img = obj.values.T[::-1]  # d grows upward, beta to the right
    io.write_pgm(args.output, io.to_gray(img))
    print(f"wrote {args.output}")


def cmd_selftest(args):
    from .selftest import run_selftest
    return EXIT_OK if run_selftest() else EXIT_NUMERIC


def build_parser():
    ap = _Parser(prog="vlinetomo", description="V-line vector tomography toolkit")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("phantom", help="random smooth phantom -> VFLD (+ JSON spec)")
    p.add_argument("--kind", choices=("potential", "solenoidal", "angular-mode", "mixture"), default="mixture")
    p.add_argument("--n-terms", type=_positive_int, default=3)
    p.add_argument("--support", type=_positive, default=0.5, help="support radius as a fraction of R")
    p.add_argument("--R", type=_positive, default=1.0)
    p.add_argument("--nx", type=_positive_int, default=256)
    p.add_argument("--ny", type=_positive_int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("forward", help="phantom (.json exact, .vfld sampled) -> L/T VSIN pair")
    p.add_argument("input")
    p.add_argument("--theta", type=_angle, required=True)
    p.add_argument("--n-beta", type=_positive_int, default=360)
    p.add_argument("--n-d", type=_positive_int, default=257)
    p.add_argument("--partial", action="store_true", help="sample d in [0, R] instead of [0, 2R]")
    p.add_argument("--quad-step", type=_positive, default=None)
    p.add_argument("--noise", type=_nonneg, default=0.0, help="std of additive Gaussian noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("-o", "--output", required=True, help="output prefix")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("recon-full", help="full data (d in [0, 2R]) -> VFLD")
    p.add_argument("L")
    p.add_argument("T")
    p.add_argument("--nx", type=_positive_int, default=256)
    p.add_argument("--ny", type=_positive_int, default=256)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_recon_full)

    p = sub.add_parser("recon-partial", help="partial data (d in [0, R]) -> VFLD")
    p.add_argument("L")
    p.add_argument("T")
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--method", choices=("mellin", "collocation"), default="mellin")
    p.add_argument("--c", type=float, default=DEFAULT_C)
    p.add_argument("--omega-max", type=_positive, default=DEFAULT_OMEGA_MAX)
    p.add_argument("--d-omega", type=_positive, default=DEFAULT_D_OMEGA)
    p.add_argument("--nx", type=_positive_int, default=256)
    p.add_argument("--ny", type=_positive_int, default=256)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--profiles", help="write per-mode profiles as CSV")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_recon_partial)

    p = sub.add_parser("compare", help="print label,rel_l2,max_abs for two VFLD or two VSIN files")
    p.add_argument("test")
    p.add_argument("reference")
    p.add_argument("--label", default="metric")
    p.add_argument("--radius", type=_positive, default=None, help="restrict to |x| <= radius*R (fields)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("render", help="VFLD component or VSIN -> 8-bit PGM")
    p.add_argument("input")
    p.add_argument("--component", choices=("f1", "f2", "magnitude"), default="magnitude")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("selftest", help="run the invariant checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        code = args.func(args)
    except (FormatError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
