"""Command-line front end: ``thomascore {solve,price,experiment,bounds,perf}``.

Exit status is 0 on success, 1 for usage or input errors and 2 when the
numerics fail (singular pivot, overflow in raise mode, failed certification).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .backends import make_backend
from .bounds import BOUND_TABLE, check_range_conditions, compute_bounds, theorem_status
from .experiment import ExperimentConfig, run_experiment
from .fixed_point import FixedFormat
from .pipeline import (LatencyProfile, bandwidth_partition, compute_cycles, compute_time,
                       get_profile, max_throughput_ok, preset_profiles, rate_of_computation,
                       speedup_table)
from .pricer import (CertificationFailed, GridSpec, MarketParams, PricingProblem, ScalingMode,
                     STENCILS, ZeroPayoff, price)
from .tridiag import (Singular, SystemFormatError, read_csv, read_json, residual,
                      thomas_hw, thomas_reference)

log = logging.getLogger("thomascore")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _format_arg(text):
    try:
        return FixedFormat.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", type=_format_arg, default=argparse.SUPPRESS,
                        help="fixed-point format [i,f] (default [2,30])")
    common.add_argument("--backend", choices=("real", "fixed"), default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS,
                        help="output directory (stdout when omitted)")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="thomascore", parents=[common],
                description="Tridiagonal solver, fixed-point error study and pipeline model.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="solve a system stored as CSV or JSON")
    s.add_argument("path", type=Path)
    s.add_argument("--solver", choices=("hw", "reference"), default="hw")
    s.add_argument("--overflow", choices=("raise", "saturate"), default="raise")

    s = sub.add_parser("price", parents=[common], help="price a European option")
    s.add_argument("--r", type=float, default=0.05)
    s.add_argument("--sigma", type=float, default=0.2)
    s.add_argument("--K", type=float, default=1.0)
    s.add_argument("--S-max", dest="S_max", type=float, default=2.0)
    s.add_argument("--N", type=int, default=100)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--M", type=int)
    g.add_argument("--dt", type=float)
    s.add_argument("--payoff", choices=("call", "put"), default="call")
    s.add_argument("--scaling", choices=[m.value for m in ScalingMode], default="045")
    s.add_argument("--stencil", choices=STENCILS, default="halved")
    s.add_argument("--Z", type=float, default=2.0)
    s.add_argument("--overflow", choices=("raise", "saturate"), default="raise")
    s.add_argument("--certify", action="store_true")

    s = sub.add_parser("experiment", parents=[common], help="fixed-point error study")
    s.add_argument("--samples", type=int, default=5000)
    s.add_argument("--N", type=int, default=100)
    s.add_argument("--dt", type=float, default=0.001)
    s.add_argument("--formats", default="[2,30];[2,22];[2,14]",
                   help="semicolon separated list of formats")
    s.add_argument("--input-precision", choices=("float32", "float64"), default="float32")
    s.add_argument("--stencil", choices=STENCILS, default="halved")
    s.add_argument("--full-pricing", action="store_true")
    s.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("bounds", parents=[common], help="range bounds for a system")
    s.add_argument("path", type=Path)
    s.add_argument("--Z", type=float, default=2.0)
    s.add_argument("--json", action="store_true")

    s = sub.add_parser("perf", parents=[common], help="analytic latency and speed-up report")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--profile", action="append",
                   help="preset name (repeatable); all presets when omitted")
    g.add_argument("--profile-json", type=Path)
    s.add_argument("--M", type=int, default=1)
    s.add_argument("--N", type=int, default=100)
    s.add_argument("--r-d", dest="r_d", type=float, default=None, help="host bandwidth, bits/s")
    s.add_argument("--baseline", type=float, default=0.020, help="CPU time per system, ms")
    s.add_argument("--csv", action="store_true")
    return p


def _opt(args, name, default):
    return getattr(args, name, default)


def _emit(args, name: str, text: str):
    out = _opt(args, "out", None)
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    log.info("wrote %s", out / name)


def _backend(args, overflow="raise"):
    kind = _opt(args, "backend", "real")
    fmt = _opt(args, "format", FixedFormat(2, 30))
    return make_backend(kind, fmt, overflow)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load_system(path: Path):
    if path.suffix.lower() == ".json":
        return read_json(path)
    return read_csv(path), None


def cmd_solve(args) -> int:
    system, fmt = _load_system(args.path)
    if fmt is not None and not hasattr(args, "format"):
        args.format = fmt
    be = _backend(args, args.overflow)
    solver = thomas_hw if args.solver == "hw" else thomas_reference
    trace = solver(system, be)
    res = residual(system, trace.x)
    text = _csv_text(["i", "x"], [(i, repr(float(v))) for i, v in enumerate(trace.x)])
    text += f"# residual,{res!r}\n"
    for row, var in trace.overflow_events:
        text += f"# overflow,{row},{var}\n"
    _emit(args, "solution.csv", text)
    return EXIT_OK


def cmd_price(args) -> int:
    if args.M is not None:
        grid = GridSpec(args.N, args.M, args.S_max)
    elif args.dt is not None:
        grid = GridSpec.from_dt(args.N, args.dt, args.S_max)
    else:
        grid = GridSpec(args.N, 1000, args.S_max)
    market = MarketParams(args.r, args.sigma)
    if not grid.satisfies_constraint(market.sigma):
        log.warning("dt=%g breaks the grid constraint for sigma=%g", grid.dt, market.sigma)
    problem = PricingProblem(market, grid, args.K, args.payoff, args.Z, args.scaling, args.stencil)
    res = price(problem, _backend(args, args.overflow), certify=args.certify)
    text = _csv_text(["S", "V"], [(repr(float(s)), repr(float(v))) for s, v in zip(res.S, res.V)])
    if res.overflow_events:
        text += f"# overflow_events,{len(res.overflow_events)}\n"
    _emit(args, "price.csv", text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    formats = [f.strip() for f in args.formats.split(";") if f.strip()]
    cfg = ExperimentConfig(samples=args.samples, N=args.N, dt=args.dt, formats=formats,
                           seed=_opt(args, "seed", 0), stencil=args.stencil,
                           input_precision=args.input_precision,
                           full_pricing=args.full_pricing, workers=args.workers)
    result = run_experiment(cfg, out_dir=_opt(args, "out", None))
    doc = {"formats": result.summary_table(), "range_conditions": result.range_counts}
    if _opt(args, "out", None) is None:
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    else:
        for row in doc["formats"]:
            print(f"{row['format']:>8}  max={row['max_error']:.3e}  "
                  f"expected={row['expected_rounding_error']:.3e}  "
                  f"overflow={row['overflow_events']}  failed={row['failures']}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    system, _ = _load_system(args.path)
    rep = compute_bounds(system)
    status = theorem_status(system, _backend(args, "saturate"), report=rep)
    prop = check_range_conditions(system, args.Z)
    if args.json:
        doc = rep.to_dict()
        doc["status"] = status
        doc["range_conditions"] = prop.to_dict()
        _emit(args, "bounds.json", json.dumps(doc, indent=2, default=float) + "\n")
        return EXIT_OK
    lines = [f"{'norm |a|':<16}{rep.norm_a:>14.6g}", f"{'norm |b|':<16}{rep.norm_b:>14.6g}",
             f"{'norm |c|':<16}{rep.norm_c:>14.6g}", f"{'norm |y|':<16}{rep.norm_y:>14.6g}", ""]
    for bound, (quantity, rel, thm) in BOUND_TABLE.items():
        lines.append(f"{bound:<16}{quantity:<10}{rel:<3}{getattr(rep, bound):>14.6g}  "
                     f"{thm:<12}{status[bound]}")
    lines.append("")
    for k, v in rep.preconditions.items():
        lines.append(f"{k:<22}{'yes' if v else 'no'}")
    lines.append("")
    for i in range(1, 5):
        ok = getattr(prop, f"cond{i}")
        lines.append(f"{'range cond ' + str(i):<22}{'yes' if ok else 'no':<5}"
                     f"slack={getattr(prop, f'slack{i}'):.6g}")
    lines.append(f"{'y scale required':<22}{prop.y_scale_required:.6g}")
    _emit(args, "bounds.txt", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_perf(args) -> int:
    if args.profile_json is not None:
        profiles = [LatencyProfile.from_json(args.profile_json)]
    elif args.profile:
        profiles = [get_profile(p) for p in args.profile]
    else:
        profiles = list(preset_profiles().values())
    if args.M < 1 or args.N < 1:
        raise UsageError("M and N must be >= 1")
    baseline = args.baseline * 1e-3
    table = speedup_table(profiles, baseline, N=args.N)
    header = ["profile", "min_ms", "min_speedup", "max_ms", "max_speedup",
              "M", "blocks", "cycles", "batch_ms", "full_pipeline"]
    rows = [["cpu", f"{args.baseline:.6g}", "1", f"{args.baseline:.6g}", "1", "", "", "", "", ""]]
    for prof, row in zip(profiles, table):
        r_d = args.r_d if args.r_d is not None else rate_of_computation(prof)
        sched = bandwidth_partition(args.M, prof, r_d)
        rows.append([prof.name, f"{row.min_time * 1e3:.6g}", f"{row.min_speedup:.3g}",
                     f"{row.max_time * 1e3:.6g}", f"{row.max_speedup:.3g}",
                     args.M, sched.B, compute_cycles(args.N, sched, prof),
                     f"{compute_time(args.N, sched, prof) * 1e3:.6g}",
                     "yes" if max_throughput_ok(args.M, prof) else "no"])
    if args.csv:
        _emit(args, "perf.csv", _csv_text(header, rows))
        return EXIT_OK
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    text = "\n".join("  ".join(str(v).rjust(w) for v, w in zip(r, widths))
                     for r in [header] + rows) + "\n"
    _emit(args, "perf.txt", text)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "price": cmd_price, "experiment": cmd_experiment,
            "bounds": cmd_bounds, "perf": cmd_perf}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if _opt(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SystemFormatError, UsageError, ZeroPayoff, KeyError, FileNotFoundError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, Singular, CertificationFailed, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
