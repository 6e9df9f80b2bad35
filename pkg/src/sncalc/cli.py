"""Command-line front end.

Exit codes: 0 ok, 2 malformed input, 3 invalid transform or parameters,
4 numerical failure, 5 unstable system, 6 missing provenance.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds, mm1, serialize, simulate, transform
from .bounding import BoundingClassError
from .minplus import UnstableError
from .model import ArrivalModel, KindError
from .quadrature import QuadratureError

EXIT_SCHEMA = 2
EXIT_TRANSFORM = 3
EXIT_NUMERIC = 4
EXIT_UNSTABLE = 5
EXIT_PROVENANCE = 6


class UsageError(ValueError):
    pass


def parse_grid(spec):
    """``start:stop:step``, both ends included."""
    try:
        start, stop, step = (float(p) for p in spec.split(":"))
    except ValueError:
        raise UsageError(f"grid must look like start:stop:step, got {spec!r}") from None
    if step <= 0 or stop < start or start < 0:
        raise UsageError("grid needs 0 <= start <= stop and step > 0")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def parse_list(spec):
    try:
        return tuple(float(p) for p in spec.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {spec!r}") from None


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands ---------------------------------------------------------------------------------


def cmd_transform(args):
    m = serialize.load(args.input)
    res = transform.transform(m, args.to, args.theta)
    serialize.save(res, args.out)
    f = res.f if isinstance(res, ArrivalModel) else res.g
    onset = transform.clip_onset(f)
    theta = "-" if args.theta is None else "%g" % args.theta
    onset_s = "none" if onset is None else "%.10g" % onset
    print(f"kind={res.kind.value} theta={theta} clip_onset_x={onset_s}")
    return 0


def cmd_bound(args):
    a = serialize.load(args.arrival)
    s = serialize.load(args.service)
    if args.kind == "output":
        out = bounds.output_model(a, s)
        _emit(serialize.dumps(out), args.out)
        return 0
    x = parse_grid(args.grid)
    fn = bounds.delay_bound if args.kind == "delay" else bounds.backlog_bound
    rep = fn(a, s, x)
    _emit(rep.to_json() if args.format == "json" else rep.to_csv(), args.out)
    return 0


def cmd_tighten(args):
    m = serialize.load(args.input)
    fn = transform.tighten_arrival if isinstance(m, ArrivalModel) else transform.tighten_service
    res = fn(m, args.epsilon, args.x_floor)
    if res.tightest:
        print(f"tightest within tolerance {args.epsilon:g}")
        return 0
    note = " (search floor)" if res.at_floor else ""
    print(f"theta2={res.theta2:.10g}{note} phi={res.phi:.10g}")
    if args.out:
        serialize.save(transform.rebuild(m, res.theta2), args.out)
    return 0


def _mm1_params(args):
    return mm1.MM1Params(args.lam, args.mu, args.theta, parse_list(args.T))


def cmd_mm1(args):
    p = _mm1_params(args)
    rows = mm1.mm1_report(p, parse_grid(args.grid), args.path, args.variant)
    _emit(mm1.rows_to_csv(rows), args.out)
    return 0


def cmd_simulate(args):
    p = _mm1_params(args)
    tr = simulate.simulate_mm1(p.lam, p.mu, args.n, args.seed)
    rows = mm1.mm1_report(p, parse_grid(args.grid), args.path, args.variant)
    emp = simulate.empirical_delay_tail(tr, [r["delay_value"] for r in rows])
    for r, (_, frac, ci) in zip(rows, emp):
        r["empirical_prob"] = float(frac)
        r["ci"] = float(ci)
    _emit(mm1.rows_to_csv(rows, mm1.CSV_COLUMNS + ["empirical_prob", "ci"]), args.out)
    return 0


# -- parser -------------------------------------------------------------------------------------


def _positive_int(v):
    n = int(v)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _mm1_args(p, grid="0:25:0.25"):
    p.add_argument("--lambda", dest="lam", type=float, default=20.0)
    p.add_argument("--mu", type=float, default=25.0)
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--T", default="1,2,4", help="comma-separated time scales")
    p.add_argument("--path", choices=["transform", "direct", "both"], default="transform")
    p.add_argument("--variant", choices=["window", "composite"], default="window")
    p.add_argument("--grid", default=grid, help="thresholds start:stop:step")
    p.add_argument("--out")


def build_parser():
    ap = argparse.ArgumentParser(prog="sncalc", description="stochastic network calculus toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="convert a model to another kind")
    p.add_argument("input")
    p.add_argument("--to", required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("bound", help="delay/backlog bound or output model")
    p.add_argument("kind", choices=["delay", "backlog", "output"])
    p.add_argument("--arrival", required=True)
    p.add_argument("--service", required=True)
    p.add_argument("--grid", default="0:50:0.5")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("tighten", help="search a smaller theta within a tolerance")
    p.add_argument("input")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--x-floor", dest="x_floor", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tighten)

    p = sub.add_parser("mm1", help="M/M/1 delay-bound table")
    _mm1_args(p)
    p.set_defaults(func=cmd_mm1)

    p = sub.add_parser("simulate", help="M/M/1 table with simulated tails")
    _mm1_args(p)
    p.add_argument("--n", type=_positive_int, default=1_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (serialize.SchemaError, UsageError, OSError) as exc:
        code, msg = EXIT_SCHEMA, str(exc)
    except transform.ProvenanceError as exc:
        code, msg = EXIT_PROVENANCE, str(exc)
    except UnstableError as exc:
        code, msg = EXIT_UNSTABLE, str(exc)
    except (QuadratureError, ArithmeticError) as exc:
        code, msg = EXIT_NUMERIC, str(exc)
    except (transform.TransformError, KindError, BoundingClassError, ValueError) as exc:
        code, msg = EXIT_TRANSFORM, str(exc)
    print(f"error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
