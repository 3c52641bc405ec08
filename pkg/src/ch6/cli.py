"""Command-line entry point: ``ch6 run|check|fit|ineq``."""

from __future__ import annotations

import argparse
import math
import sys

from . import diagnostics as diag
from . import harness
from . import inequalities as ineq
from .errors import ConfigurationError, DomainError
from .spectral import GridSpec


def _common(p):
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--scenario", metavar="NAME")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--seed", metavar="U64")
    p.add_argument("--override", metavar="KEY=VALUE", action="append", default=[])


def build_parser():
    parser = argparse.ArgumentParser(prog="ch6", description="Sixth-order Cahn-Hilliard experiments")
    sub = parser.add_subparsers(dest="verb", required=True)
    _common(sub.add_parser("run", help="run a scenario and write its artifacts"))
    _common(sub.add_parser("check", help="validate a configuration and print the resolved settings"))

    fit = sub.add_parser("fit", help="re-fit decay exponents from a diagnostics CSV")
    fit.add_argument("csv", metavar="CSV")
    fit.add_argument("--column", action="append", default=None, help="column(s) to fit, default gradL2_0 and gradL2_1")
    fit.add_argument("--t1", type=float)
    fit.add_argument("--t2", type=float)
    fit.add_argument("--box-length", type=float, default=32 * math.pi)
    fit.add_argument("--kappa0", type=float, default=1.0)

    q = sub.add_parser("ineq", help="calibrate one inequality")
    q.add_argument("kind", choices=["interpolation", "agmon", "hls", "embedding", "gagliardo_nirenberg", "kato_ponce"])
    q.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    q.add_argument("--samples", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--dim", type=int, default=3)
    q.add_argument("--n", type=int, default=16)
    q.add_argument("--k-max", type=int, default=5)
    return parser


def _load(args):
    return harness.load_config(args.config, args.override, args.scenario, args.out, args.seed)


def _cmd_run(args):
    cfg = _load(args)
    code, out, result = harness.run_scenario(cfg)
    for name, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"artifacts: {out}")
    return code


def _cmd_check(args):
    print(harness.describe(_load(args)))
    return harness.EXIT_PASS


def _cmd_fit(args):
    data = diag.read_records_csv(args.csv)
    t = data["t"]
    cadence = float(t[1] - t[0]) if t.size > 1 else 1.0
    w1, w2 = diag.decay_window(cadence, args.box_length, args.kappa0)
    window = (args.t1 if args.t1 is not None else w1, args.t2 if args.t2 is not None else w2)
    for col in args.column or ["gradL2_0", "gradL2_1"]:
        if col not in data:
            raise ConfigurationError(f"{args.csv} has no column {col!r}")
        f = diag.fit_decay(t, data[col], window)
        print(f"{col} window=[{f.t1:g}, {f.t2:g}] samples={f.samples} sigma={f.sigma:.6f} r2={f.r2:.6f}")
    return harness.EXIT_PASS


_CASES = {
    "interpolation": (ineq.Interpolation, dict(l=1.0, k=1.0, s=0.5)),
    "agmon": (ineq.Agmon, {}),
    "hls": (ineq.HLS, dict(s=0.5, p=1.5)),
    "embedding": (ineq.HomogeneousEmbedding, dict(s=1.0)),
    "gagliardo_nirenberg": (ineq.GagliardoNirenberg, dict(alpha=1, m=0, l=2, p=4, q=2, r=2, theta=0.875)),
    "kato_ponce": (ineq.KatoPonce, dict(s=1, p=2, p1=4, p2=4, q1=4, q2=4)),
}


def _cmd_ineq(args):
    cls, params = _CASES[args.kind]
    params = dict(params)
    for item in args.param:
        key, value = harness.parse_override(item)
        params[key] = value if key == "variant" else harness._as_float(key, value)
    try:
        case = cls(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {args.kind}: {exc}") from None
    grid = GridSpec(args.dim, args.n)
    rep = ineq.calibrate(case, args.samples, args.seed, grid, args.k_max)
    print(rep.summary())
    if args.kind == "interpolation":
        return harness.EXIT_PASS if rep.max_ratio <= 1 + 1e-10 else harness.EXIT_FAIL
    return harness.EXIT_PASS if math.isfinite(rep.max_ratio) else harness.EXIT_FAIL


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "check": _cmd_check, "fit": _cmd_fit, "ineq": _cmd_ineq}[args.verb]
    try:
        return handler(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
