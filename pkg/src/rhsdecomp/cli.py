"""Command line: ``rhsdecomp {shor,declp,verify}``.

Exit status: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .errors import InvalidPenaltyBound, InvalidProblem, MaxPivotsExceeded
from .harness import declp_experiment, shor_experiment, verify_experiment
from .nsopt import OracleFailure
from .problem import load_problem, save_problem
from .testbed import GeneratorSpec, generate_declp

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("rhsdecomp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _outputs(p):
    p.add_argument("--csv", metavar="PATH", help="write the iteration trace as CSV")
    p.add_argument("--json", metavar="PATH", help="write the experiment report as JSON")
    p.add_argument("--config", metavar="PATH",
                   help="take defaults from a JSON config (or a previous --json report)")
    p.add_argument("--deterministic", action="store_true",
                   help="omit wall-clock timings and timestamps so outputs are byte-reproducible")


def build_parser():
    parser = _Parser(prog="rhsdecomp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("shor", help="subgradient methods on Shor's max-of-quadratics problem")
    s.add_argument("--method", choices=["sgm", "sgmts", "sgmsq", "dasg"], default="sgm")
    s.add_argument("--theta", type=float, default=0.1)
    s.add_argument("--nu", type=float, help="two-speed decay ratio (sgmts only, default 0.7)")
    s.add_argument("--d", type=int, help="two-speed restart spacing (sgmts only, default 25)")
    s.add_argument("--offset", type=int, help="step offset o in theta/(k+o) (sgm/sgmts, default 1)")
    s.add_argument("--eps", type=_floats, default=[0.1, 0.01, 0.001, 0.0001])
    s.add_argument("--max-iter", type=int, default=50_000)
    s.add_argument("--normalize", action="store_true", help="step along g/||g||")
    s.add_argument("--stride", type=int, default=1, help="record every n-th iterate in the trace")
    _outputs(s)

    d = sub.add_parser("declp", help="solve the share-allocation master problem of a decomposable LP")
    d.add_argument("--l", type=int, help="number of blocks for the generated instance")
    d.add_argument("--phase", type=float, default=0.0, help="generator phase offset")
    d.add_argument("--problem", metavar="PATH", help="load the instance from a problem JSON file")
    d.add_argument("--save-problem", metavar="PATH", help="write the instance as problem JSON")
    d.add_argument("--method", choices=["sgm", "sgmts", "sgmsq"], default="sgmts")
    d.add_argument("--theta", type=float, default=5.0)
    d.add_argument("--nu", type=float, help="two-speed decay ratio (sgmts only, default 0.8)")
    d.add_argument("--d", type=int, help="two-speed restart spacing (sgmts only, default 25)")
    d.add_argument("--offset", type=int, help="step offset o in theta/(k+o) (sgm/sgmts, default 2)")
    d.add_argument("--budget", type=int, default=2000, help="number of master iterations")
    d.add_argument("--t-mode", choices=["auto", "explicit"], default="auto")
    d.add_argument("--t", type=_floats, help="penalty vector for --t-mode explicit")
    d.add_argument("--margin", type=float, default=1.0, help="auto mode: t = 2 lambda* + margin")
    d.add_argument("--normalize", action="store_true")
    d.add_argument("--checkpoint", type=int, default=50, help="report spacing in iterations")
    d.add_argument("--stride", type=int, default=1)
    _outputs(d)

    v = sub.add_parser("verify", help="check exact-penalty equivalence on generated instances")
    v.add_argument("--l", type=_ints, default=[1, 2, 5], help="comma-separated block counts")
    v.add_argument("--phase", type=float, default=0.0)
    v.add_argument("--t", type=_floats, help="explicit penalty vector instead of calibration")
    v.add_argument("--samples", type=int, default=50, help="random U-pairs per instance")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--margin", type=float, default=1.0)
    _outputs(v)
    return parser


_NOT_CONFIG = {"command", "verbose", "csv", "json", "config", "deterministic", "save_problem"}


def _apply_config(parser, argv):
    """Parse twice so a --config file supplies defaults that explicit flags override."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    cfg = doc.get("config", doc) if isinstance(doc, dict) else None
    if not isinstance(cfg, dict):
        parser.error("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest in known and dest not in _NOT_CONFIG:
            defaults[dest] = val
    # Values from a report are already resolved; "l" may be a list for verify.
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _check_schedule_flags(args, nu_default, d_default, offset_default):
    if args.method == "sgmts":
        args.nu = nu_default if args.nu is None else args.nu
        args.d = d_default if args.d is None else args.d
        if not 0 < args.nu < 1:
            raise UsageError("--nu must lie in (0, 1)")
        if args.d < 1:
            raise UsageError("--d must be >= 1")
    else:
        if args.nu is not None or args.d is not None:
            raise UsageError("--nu and --d only apply to --method sgmts")
    if args.method in ("sgm", "sgmts"):
        args.offset = offset_default if args.offset is None else args.offset
        if args.offset < 1:
            raise UsageError("--offset must be >= 1")
    elif args.offset is not None:
        raise UsageError("--offset only applies to --method sgm or sgmts")
    if args.theta <= 0:
        raise UsageError("--theta must be positive")


def _emit(report, trace, args):
    if args.json:
        report.write_json(args.json)
    if args.csv and trace is not None:
        trace.write_csv(args.csv)


def _fmt(x):
    return "-" if x is None else (f"{x:.10g}" if isinstance(x, float) else str(x))


def _print_table(header, rows):
    cells = [[_fmt(r.get(h)) for h in header] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h) for i, h in enumerate(header)]
    print("  ".join(h.rjust(w) for h, w in zip(header, widths)))
    for c in cells:
        print("  ".join(x.rjust(w) for x, w in zip(c, widths)))


def cmd_shor(args):
    _check_schedule_flags(args, 0.7, 25, 1)
    if not args.eps or any(e <= 0 for e in args.eps):
        raise UsageError("--eps needs positive accuracies")
    if args.max_iter < 0 or args.stride < 1:
        raise UsageError("--max-iter must be >= 0 and --stride >= 1")
    report, trace = shor_experiment(
        method=args.method, theta=args.theta, nu=args.nu, d=args.d,
        offset=args.offset if args.offset is not None else 1, eps=tuple(args.eps),
        max_iter=args.max_iter, normalize=args.normalize, stride=args.stride, timed=not args.deterministic,
    )
    print(f"shor  method={args.method}  theta={args.theta}  status={trace.status}")
    _print_table(["eps", "iterations", "evaluations"], report.rows)
    print(f"best phi = {trace.best:.10g}  (phi* = 22.60016, gap {trace.best - 22.60016:.3g})")
    _emit(report, trace, args)
    return EXIT_OK


def cmd_declp(args):
    _check_schedule_flags(args, 0.8, 25, 2)
    if args.budget < 0 or args.checkpoint < 1 or args.stride < 1:
        raise UsageError("--budget must be >= 0, --checkpoint and --stride >= 1")
    if args.t_mode == "explicit" and args.t is None and not args.problem:
        raise UsageError("--t-mode explicit needs --t (or a problem file carrying t)")
    if args.t is not None and args.t_mode != "explicit":
        raise UsageError("--t requires --t-mode explicit")
    t = args.t
    if args.problem:
        if args.l is not None:
            raise UsageError("give either --l or --problem, not both")
        p, t_file = load_problem(args.problem)
        if t is None and t_file is not None:
            t = t_file.t.tolist()
        if args.t_mode == "explicit" and t is None:
            raise UsageError("--t-mode explicit needs --t or a problem file carrying t")
        problem_id = f"file:{args.problem}"
    else:
        if args.l is None or args.l < 1:
            raise UsageError("--l must be a positive integer")
        p = generate_declp(GeneratorSpec(args.l, args.phase))
        problem_id = f"declp-l{args.l}-phase{args.phase}"
    if args.save_problem:
        save_problem(args.save_problem, p)
    extra = {"l": args.l, "phase": args.phase, "problem": args.problem}
    report, trace = declp_experiment(
        p, problem_id, method=args.method, theta=args.theta, nu=args.nu, d=args.d,
        offset=args.offset if args.offset is not None else 2, budget=args.budget, t_mode=args.t_mode, t=t,
        margin=args.margin, normalize=args.normalize, checkpoint=args.checkpoint, stride=args.stride,
        timed=not args.deterministic, extra_config=extra,
    )
    s = report.summary
    print(f"declp  {problem_id}  method={args.method}  theta={args.theta}  status={s['status']}")
    _print_table(["it", "f"], report.rows)
    print(f"f* = {s['f_star']:.10g}   best = {s['best']:.10g}   gap = {s['gap']:.3g}")
    print(f"lambda* = {s['lambda_star']}   t = {s['t']}   t > lambda*: {s['t_dominates_lambda']}")
    print(f"recovered x: objective {s['recovered_objective']:.10g}, joint violation {s['recovered_violation']:.3g}")
    _emit(report, trace, args)
    return EXIT_OK


def cmd_verify(args):
    if not args.l or any(l < 1 for l in args.l):
        raise UsageError("--l needs positive block counts")
    if args.samples < 0:
        raise UsageError("--samples must be >= 0")
    report = verify_experiment(ls=tuple(args.l), phase=args.phase, t=args.t, samples=args.samples,
                               seed=args.seed, margin=args.margin, timed=not args.deterministic)
    for row in report.rows:
        verdict = "PASS" if row["passed"] else "FAIL"
        print(f"l={row['l']}: {verdict}   f* = {row['f_star']:.10g}   lambda* = {row['lambda_star']}   t = {row['t']}")
        if not row["precondition"]:
            print("  t does not strictly dominate lambda*: exactness is not guaranteed "
                  "(expected failure of the penalty-equivalence precondition)")
        for name, chk in row["checks"].items():
            detail = ", ".join(f"{k}={_fmt(v)}" for k, v in chk.items() if k != "passed")
            print(f"  {'ok  ' if chk['passed'] else 'FAIL'} {name}: {detail}")
    _emit(report, None, args)
    return EXIT_OK if report.summary["passed"] else EXIT_NUMERIC


COMMANDS = {"shor": cmd_shor, "declp": cmd_declp, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InvalidPenaltyBound, InvalidProblem, OracleFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MaxPivotsExceeded, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
