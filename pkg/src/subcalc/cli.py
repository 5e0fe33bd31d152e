"""Command-line front end.

    subcalc weights --p 5 --alpha 0.5 --sigma 0.5 --h 0.1 --n 100
    subcalc apply --p 5 --alpha 0.5 --sigma 0.5 --in f.csv [--fast] [--beta 1.6 --r 4]
    subcalc solve --p 5 --alpha 0.5 --sigma 0.5 --in rhs.csv --f0 0 [--beta 1.6 --r 4]
    subcalc starting-weights --p 5 --alpha 0.5 --sigma 0.5 --h 0.1 --n 10 --beta 1.6
    subcalc converge --experiment table2 --format json [--assert]

CSV files are headered, comma separated, 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .errors import GridFormatError, SubcalcError
from .gridops import GridFunction, apply, apply_fast, solve
from .harness import REGISTRY, check_results, run_named
from .starting import corrected_apply, corrected_solve, starting_weights
from .weights import OperatorSpec, weights

_SPACING_RTOL = 1e-12


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(path, header, rows):
    out, close = _open_out(path)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    finally:
        if close:
            out.close()


def read_grid_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read two numeric columns (x, value); a non-numeric first row is a header."""
    with (sys.stdin if path == "-" else open(path, newline="")) as fh:
        text = fh.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise GridFormatError(f"{path}: no data rows")
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise GridFormatError(f"{path}: expected two numeric columns ({exc})") from None
    return data[:, 0], data[:, 1]


def grid_from_samples(x: np.ndarray, values: np.ndarray, h: float | None = None) -> GridFunction:
    if x.size == 1:
        if h is None:
            raise GridFormatError("a single sample needs --h")
        return GridFunction(float(x[0]), h, values)
    steps = np.diff(x)
    step = (x[-1] - x[0]) / (x.size - 1)
    if not step > 0 or np.max(np.abs(steps - step)) > _SPACING_RTOL * max(step, abs(x[-1])):
        raise GridFormatError("input grid is not uniform (spacing deviation above 1e-12 relative)")
    if h is not None and abs(h - step) > _SPACING_RTOL * max(h, abs(x[-1])):
        raise GridFormatError(f"--h {h} does not match the grid spacing {step}")
    return GridFunction(float(x[0]), float(step), values)


def _spec(args, h) -> OperatorSpec:
    return OperatorSpec(args.alpha, args.sigma, args.p, h)


def cmd_weights(args):
    spec = _spec(args, args.h)
    g = weights(spec, args.n).g
    _write_csv(args.out, ["m", "g_m"], ((str(m), gm) for m, gm in enumerate(g)))


def _starting_for(args, spec, n):
    if args.beta is None:
        if args.r is not None:
            raise SubcalcError("--r needs --beta")
        return None
    return starting_weights(spec, args.beta, args.r, max(n, 1))


def cmd_apply(args):
    x, vals = read_grid_csv(args.input)
    f = grid_from_samples(x, vals, args.h)
    spec = _spec(args, f.h)
    sws = _starting_for(args, spec, f.N)
    if sws is not None:
        out = corrected_apply(spec, sws, f)
    else:
        out = (apply_fast if args.fast else apply)(spec, f)
    _write_csv(args.out, ["x", "value"], zip(out.x, out.values))


def cmd_solve(args):
    x, vals = read_grid_csv(args.input)
    rhs = grid_from_samples(x, vals, args.h)
    spec = _spec(args, rhs.h)
    sws = _starting_for(args, spec, rhs.N)
    out = solve(spec, rhs, args.f0) if sws is None else corrected_solve(spec, sws, rhs, args.f0)
    _write_csv(args.out, ["x", "value"], zip(out.x, out.values))


def cmd_starting_weights(args):
    spec = _spec(args, args.h)
    sws = starting_weights(spec, args.beta, args.r, args.n)
    header = ["n"] + [f"kappa_{j}" for j in range(1, sws.r + 1)]
    _write_csv(args.out, header, ([str(n), *sws.kappa[n]] for n in range(1, sws.N + 1)))


def cmd_converge(args):
    results = run_named(args.experiment, mode=args.mode)
    if args.experiment == "identities":
        if args.format == "json":
            payload = {"experiment": "identities",
                       "results": [vars(r) for r in results]}
            _write_json(args.out, payload)
        else:
            _write_csv(args.out, ["identity", "max_residual", "passed"],
                       ([r.identity, r.max_residual, str(r.passed).lower()] for r in results))
    elif args.format == "json":
        _write_json(args.out, [r.to_dict() for r in results])
    else:
        rows = ([str(rep.p), rep.alpha, row.h, row.max_error, row.rate]
                for rep in results for row in rep.rows)
        _write_csv(args.out, ["p", "alpha", "h", "max_error", "rate"], rows)

    if args.check:
        failed = [c for c in check_results(args.experiment, results) if not c.passed]
        for c in failed:
            print(f"FAIL {c.criterion}: {c.detail}", file=sys.stderr)
        return 1 if failed else 0
    return 0


def _write_json(path, payload):
    out, close = _open_out(path)
    try:
        json.dump(payload, out, indent=2)
        out.write("\n")
    finally:
        if close:
            out.close()


def _add_spec_flags(p, with_h=True):
    p.add_argument("--p", type=int, required=True, help="scheme order 1..5")
    p.add_argument("--alpha", type=float, required=True,
                   help="operator order; > 0 derivative, < 0 integral")
    p.add_argument("--sigma", type=float, required=True, help="damping parameter")
    p.add_argument("--h", type=float, required=with_h, default=None, help="grid spacing")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subcalc", description=__doc__.split("\n")[0],
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="dump convolution quadrature weights", allow_abbrev=False)
    _add_spec_flags(p)
    p.add_argument("--n", type=int, required=True, help="largest weight index")
    p.set_defaults(func=cmd_weights)

    for name, func, help_ in (("apply", cmd_apply, "apply the discrete operator to sampled data"),
                              ("solve", cmd_solve, "solve the discrete equation for f")):
        p = sub.add_parser(name, help=help_, allow_abbrev=False)
        _add_spec_flags(p, with_h=False)
        p.add_argument("--in", dest="input", required=True, help="CSV of (x, value) on a uniform grid")
        p.add_argument("--beta", type=float, default=None, help="engage starting weights for x^(beta-1) data")
        p.add_argument("--r", type=int, default=None, help="number of correction nodes")
        if name == "apply":
            p.add_argument("--fast", action="store_true", help="FFT convolution path")
        else:
            p.add_argument("--f0", type=float, default=0.0, help="prescribed value at the first node")
        p.set_defaults(func=func)

    p = sub.add_parser("starting-weights", help="dump starting-weight rows", allow_abbrev=False)
    _add_spec_flags(p)
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--r", type=int, default=None)
    p.set_defaults(func=cmd_starting_weights)

    p = sub.add_parser("converge", help="run a convergence experiment", allow_abbrev=False)
    p.add_argument("--experiment", required=True, choices=REGISTRY)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--mode", choices=("residual", "solve"), default="residual",
                   help="compare scheme residuals (default) or solved f against the exact solution")
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit non-zero unless all acceptance thresholds pass")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except (SubcalcError, OSError) as exc:
        print(f"subcalc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
