"""``tddirk`` command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 runtime error (stage nonconvergence, missing reference, I/O).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, experiments, families
from .errors import DomainError, NonconvergenceError, TDDIRKError, UnknownSchemeError
from .experiments import MissingReferenceError
from .io import atomic_write_text
from .tableau import (
    ORDER_CONDITIONS,
    classify_order,
    default_registry,
    order_condition_residuals,
    row_assumption_residuals,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

# Published leading phase-error terms of the built-in schemes:
# (dispersion order, |constant|, dissipation order, |constant|).
PHASE_TARGETS = {
    "OTDDIRK4s2a": (6, 0.0000062727, 7, 0.0000474716),
    "OTDDIRK4s2b": (8, 0.00001112846, 5, 0.00007992350),
    "TDDIRK5s2": (6, 0.000173639, 5, 0.000138889),
    "OTDDIRK5s3": (8, 0.000000449669, 7, 0.000000563909),
}
PHASE_REL_TOL = 0.01

DEFAULT_CACHE = os.environ.get("TDDIRK_CACHE", ".tddirk-cache")


class UsageError(TDDIRKError):
    pass


def _floats(text):
    try:
        return [float(eval_fraction(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def eval_fraction(v):
    """Parse ``0.25`` or ``1/4``."""
    v = v.strip()
    if "/" in v:
        num, den = v.split("/", 1)
        return float(num) / float(den)
    return float(v)


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _window(text):
    vals = _floats(text)
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise argparse.ArgumentTypeError("window must be re_min,re_max,im_min,im_max")
    return tuple(vals)


def _resolution(text):
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("resolution must look like 600x1200")
    if nx < 2 or ny < 2:
        raise argparse.ArgumentTypeError("resolution must be at least 2x2")
    return nx, ny


def _common_parser(top):
    # On subcommands the defaults are suppressed so that a flag given before
    # the subcommand is not reset by the subparser.
    def d(value):
        return value if top else argparse.SUPPRESS

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--csv", metavar="PATH", default=d(None),
                   help="write the machine-readable result here")
    p.add_argument("--svg", metavar="PATH", default=d(None), help="write an SVG chart here")
    p.add_argument("--tol", type=float, default=d(None), help="verification tolerance")
    p.add_argument("--seed", type=int, default=d(0),
                   help="accepted for reproducibility; every command is deterministic")
    p.add_argument("--tableau", metavar="FILE", action="append", default=d([]),
                   help="load an extra tableau from JSON (repeatable)")
    p.add_argument("--tableau-dir", metavar="DIR", default=d(None),
                   help="load every *.json tableau in DIR")
    p.add_argument("--cache-dir", default=d(DEFAULT_CACHE),
                   help=f"directory of reference solutions (default: {DEFAULT_CACHE})")
    return p


def _problem_flags(p, default_problem="harmonic"):
    p.add_argument("--problem", choices=experiments.PROBLEM_NAMES, default=default_problem)
    p.add_argument("--h", type=_floats, help="comma-separated step sizes (fractions allowed)")
    p.add_argument("--amplitude", type=float, default=experiments.ADVECTION_AMPLITUDE,
                   help="advection initial amplitude on 2 < x < 4")
    p.add_argument("--points", type=int, default=101, help="ADR grid points per direction")
    p.add_argument("--coarse", action="store_true", help="ADR on the 1/20 mesh (21 points)")
    p.add_argument("--t-end", type=float, help="override the final time")
    metric = p.add_mutually_exclusive_group()
    metric.add_argument("--error-over-trajectory", dest="over_trajectory",
                        action="store_const", const=True, default=None,
                        help="max error over all step times")
    metric.add_argument("--final-time-error", dest="over_trajectory",
                        action="store_const", const=False,
                        help="error at the final time only")


def build_parser():
    common = _common_parser(top=False)
    parser = argparse.ArgumentParser(
        prog="tddirk", parents=[_common_parser(top=True)],
        description="Two-derivative DIRK schemes: verification, analysis and experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", parents=[common], help="list registered schemes")

    p = sub.add_parser("verify", parents=[common], help="check order conditions")
    p.add_argument("scheme")
    p.add_argument("--order", type=int, help="override the claimed order")

    sub.add_parser("derive", parents=[common],
                   help="re-derive the built-in tableaux from their families")

    p = sub.add_parser("stability", parents=[common], help="stability region raster")
    p.add_argument("scheme")
    p.add_argument("--window", type=_window, default=analysis.DEFAULT_WINDOW,
                   help="re_min,re_max,im_min,im_max (default: -6,0.3,-6,6)")
    p.add_argument("--resolution", type=_resolution, default=(600, 1200), help="NXxNY")
    p.add_argument("--out", metavar="PREFIX", help="write PREFIX.ppm and PREFIX.svg")

    p = sub.add_parser("phase", parents=[common], help="dispersion/dissipation expansion")
    p.add_argument("scheme")
    p.add_argument("--nu-min", type=float, default=0.05)
    p.add_argument("--nu-max", type=float, default=0.8)
    p.add_argument("--samples", type=int, default=17)

    p = sub.add_parser("converge", parents=[common], help="convergence study")
    p.add_argument("schemes", type=_names, help="comma-separated scheme names")
    _problem_flags(p)
    p.add_argument("--N", type=int, default=50, help="advection grid parameter (dx = 2/N)")

    p = sub.add_parser("bench", parents=[common], help="accuracy/efficiency benchmark")
    p.add_argument("--schemes", type=_names, default=None,
                   help="comma-separated scheme names (default: all registered)")
    _problem_flags(p, default_problem="advection")
    p.add_argument("--N", type=_ints, default=None,
                   help="advection grid parameters (default: 50,100,200)")
    p.add_argument("--dx", type=_floats, help="advection spacings instead of --N")
    p.add_argument("--cfl", type=_floats, help="advection CFL numbers; h = cfl * dx")
    p.add_argument("--repeats", type=int, default=3, help="timing repeats (median)")

    p = sub.add_parser("make-reference", parents=[common],
                       help="compute and cache reference solutions")
    _problem_flags(p, default_problem="advection")
    p.add_argument("--N", type=_ints, default=None,
                   help="advection grid parameters (default: 50,100,200)")
    p.add_argument("--dx", type=_floats, help="advection spacings instead of --N")
    p.add_argument("--h-finest", type=float,
                   help="finest step the reference must serve (default: smallest default h)")
    return parser


def _registry(args):
    reg = default_registry.copy()
    for path in args.tableau:
        reg.load(path)
    if args.tableau_dir:
        if not Path(args.tableau_dir).is_dir():
            raise UsageError(f"--tableau-dir {args.tableau_dir}: not a directory")
        reg.load_dir(args.tableau_dir)
    return reg


def _write(path, text):
    try:
        atomic_write_text(path, text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _e(x):
    return "nan" if isinstance(x, float) and math.isnan(x) else f"{x:.6e}"


# -- commands ------------------------------------------------------------------

def cmd_list(args, out):
    reg = _registry(args)
    header = ["name", "stages", "order", "disp_order", "disp_const", "diss_order", "diss_const"]
    rows = []
    for name in reg.names():
        t = reg.get(name)
        tgt = PHASE_TARGETS.get(name)
        extra = [str(tgt[0]), f"{tgt[1]:.6e}", str(tgt[2]), f"{tgt[3]:.6e}"] if tgt else ["-"] * 4
        rows.append([name, str(t.s), str(t.claimed_order)] + extra)
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    for r in [header] + rows:
        print("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip(), file=out)
    if args.csv:
        _write(args.csv, "\n".join(",".join(r) for r in [header] + rows) + "\n")
    return EXIT_OK


def cmd_verify(args, out):
    t = _registry(args).get(args.scheme)
    claimed = t.claimed_order if args.order is None else args.order
    if not 1 <= claimed <= 6:
        raise UsageError("--order must lie in 1..6")
    tol = 1e-12 if args.tol is None else args.tol
    found = classify_order(t, tol=tol)
    rows = [(r.condition_id, "row", r.value) for r in row_assumption_residuals(t)]
    orders = {c.number: c.order for c in ORDER_CONDITIONS}
    for r in order_condition_residuals(t, 6):
        rows.append((r.condition_id, orders[r.condition_id], r.value))
    print(f"{t.name}: claimed order {claimed}, conditions hold up to order {found} "
          f"(tol {tol:g})", file=out)
    for cid, order, value in rows:
        needed = order == "row" or order <= claimed
        mark = ("ok" if abs(value) <= tol else "FAIL") if needed else "-"
        print(f"  {str(cid):8s} order {str(order):3s} residual {value: .3e}  {mark}", file=out)
    if args.csv:
        lines = ["condition,order,residual,required"]
        lines += [f"{cid},{order},{value!r},{int(order == 'row' or order <= claimed)}"
                  for cid, order, value in rows]
        _write(args.csv, "\n".join(lines) + "\n")
    ok = found >= claimed
    print("PASS" if ok else "FAIL", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def _derived_tableaux():
    a = families.solve_property_I()[0]
    b = families.solve_property_II()
    c2 = families.solve_optimal_c2()[0]
    return {
        "OTDDIRK4s2a": (families.tddirk4s2(a, "OTDDIRK4s2a"), f"alpha={a.alpha!r} beta={a.beta!r}"),
        "OTDDIRK4s2b": (families.tddirk4s2(b, "OTDDIRK4s2b"), f"alpha={b.alpha!r} beta={b.beta!r}"),
        "TDDIRK5s2": (families.tddirk5s2(), "closed form"),
        "OTDDIRK5s3": (families.tddirk5s3_family(families.FamilyParams3s5(c2), "OTDDIRK5s3"),
                       f"c2={c2!r}"),
    }


def cmd_derive(args, out):
    tol = 1e-13 if args.tol is None else args.tol
    lines = ["scheme,max_abs_diff,parameters"]
    ok = True
    for name, (t, info) in _derived_tableaux().items():
        ref = default_registry.get(name)
        diff = max(float(np.max(np.abs(t.A - ref.A))), float(np.max(np.abs(t.b - ref.b))),
                   float(np.max(np.abs(t.c - ref.c))))
        good = diff <= tol
        ok &= good
        print(f"{name:12s} {info}  max |diff| {diff:.2e}  {'ok' if good else 'FAIL'}", file=out)
        lines.append(f"{name},{diff!r},{info}")
    if args.csv:
        _write(args.csv, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_stability(args, out):
    t = _registry(args).get(args.scheme)
    nx, ny = args.resolution
    grid = analysis.stability_region(t, args.window, nx=nx, ny=ny)
    frac = float(np.mean(grid.stable))
    print(f"{t.name}: window {list(args.window)}, {nx}x{ny} cells, "
          f"stable fraction {frac:.4f}", file=out)
    written = []
    if args.out:
        grid.to_ppm(f"{args.out}.ppm")
        grid.to_svg(f"{args.out}.svg", title=f"{t.name}: |R(z)| <= 1")
        written += [f"{args.out}.ppm", f"{args.out}.svg"]
    if args.svg:
        grid.to_svg(args.svg, title=f"{t.name}: |R(z)| <= 1")
        written.append(args.svg)
    if args.csv:
        grid.to_csv(args.csv)
        written.append(args.csv)
    for w in written:
        print(f"wrote {w}", file=out)
    return EXIT_OK


def cmd_phase(args, out):
    t = _registry(args).get(args.scheme)
    est = analysis.estimate_phase_expansion(t, args.nu_min, args.nu_max, args.samples)
    got = (est.dispersion_order, abs(est.dispersion_constant),
           est.dissipation_order, abs(est.dissipation_constant))
    target = PHASE_TARGETS.get(t.name)
    labels = ("dispersion order", "dispersion |constant|",
              "dissipation order", "dissipation |constant|")
    print(f"{t.name}: fit on nu in [{args.nu_min}, {args.nu_max}], "
          f"relative fit residual {est.fit_residual:.1e}", file=out)
    lines = ["quantity,value" + (",target,status" if target else "")]
    for i, label in enumerate(labels):
        val = got[i]
        text = str(val) if i % 2 == 0 else f"{val:.6e}"
        if target:
            want = target[i]
            if i % 2 == 0:
                good = val == want
                wtext = str(want)
            else:
                good = abs(val - want) <= PHASE_REL_TOL * want
                wtext = f"{want:.6e}"
            status = "PASS" if good else "FAIL"
            print(f"  {label:24s} {text:>14s}  target {wtext:>14s}  {status}", file=out)
            lines.append(f"{label},{val!r},{want!r},{status}")
        else:
            print(f"  {label:24s} {text:>14s}", file=out)
            lines.append(f"{label},{val!r}")
    if args.csv:
        _write(args.csv, "\n".join(lines) + "\n")
    return EXIT_OK


def _setup(args, N=None, **over):
    kw = dict(amplitude=args.amplitude, points=args.points, coarse=args.coarse,
              t_end=args.t_end)
    kw.update(over)
    return experiments.build_problem(args.problem, N=N if N is not None else 50, **kw)


def _run_kwargs(args):
    kw = {"cache_dir": args.cache_dir, "over_trajectory": args.over_trajectory}
    if args.tol is not None:
        kw["fp_tol"] = args.tol
    return kw


def cmd_converge(args, out):
    reg = _registry(args)
    schemes = [reg.get(s) for s in args.schemes]
    setup = _setup(args, N=args.N)
    reports = [experiments.converge(t, setup, args.h, **_run_kwargs(args)) for t in schemes]
    for rep in reports:
        slope = "n/a" if rep.fitted_slope is None else f"{rep.fitted_slope:.3f}"
        print(f"{rep.scheme} on {setup.key}: slope {slope}", file=out)
        for h, e in rep.pairs:
            note = "  (excluded)" if h in rep.excluded else ""
            print(f"  h={h:<12.6g} error={_e(e)}{note}", file=out)
    if args.csv:
        _write(args.csv, experiments.convergence_to_csv(reports))
    if args.svg:
        _write(args.svg, experiments.loglog_svg(
            {r.scheme: r.pairs for r in reports}, title=f"convergence: {setup.key}"))
    return EXIT_OK


def _bench_setups(args):
    if args.problem != "advection":
        return [_setup(args)]
    if args.dx:
        Ns = [round(2.0 / dx) for dx in args.dx]
    else:
        Ns = args.N or [50, 100, 200]
    return [_setup(args, N=N) for N in Ns]


def _bench_h(args, setup):
    if args.cfl:
        if setup.dx is None:
            raise UsageError("--cfl needs a problem with a grid spacing")
        return [c * setup.dx for c in args.cfl]
    return args.h


def cmd_bench(args, out):
    reg = _registry(args)
    names = reg.names() if args.schemes is None else args.schemes
    schemes = [reg.get(s) for s in names]
    records = []
    for setup in _bench_setups(args):
        records += experiments.bench(schemes, setup, _bench_h(args, setup),
                                     repeats=args.repeats, **_run_kwargs(args))
    for r in records:
        print(f"{r.scheme:12s} {r.problem:24s} h={r.h:<10.6g} error={_e(r.error):>13s} "
              f"time={r.wall_time:.3f}s iters={r.total_fp_iterations}", file=out)
    csv = experiments.records_to_csv(records)
    if args.csv:
        _write(args.csv, csv)
    elif not records:
        out.write(csv)
    if args.svg:
        series = {}
        for r in records:
            series.setdefault(f"{r.scheme}", []).append((r.wall_time, r.error))
        _write(args.svg, experiments.loglog_svg(
            series, title="error against wall time", xlabel="wall time (s)"))
    return EXIT_OK


def cmd_make_reference(args, out):
    setups = _bench_setups(args) if args.problem == "advection" else [_setup(args)]
    for setup in setups:
        if setup.exact is not None:
            print(f"{setup.key} has an exact solution; nothing to do", file=out)
            continue
        h_finest = args.h_finest or min(args.h or setup.default_h)
        ref = experiments.make_reference(setup, h_finest, cache_dir=args.cache_dir)
        path = experiments.reference_path(setup, args.cache_dir)
        print(f"wrote {path} ({ref.scheme}, h_ref={ref.h_ref:.3g}, "
              f"{ref.states.shape[0]} samples)", file=out)
    return EXIT_OK


COMMANDS = {
    "list": cmd_list,
    "verify": cmd_verify,
    "derive": cmd_derive,
    "stability": cmd_stability,
    "phase": cmd_phase,
    "converge": cmd_converge,
    "bench": cmd_bench,
    "make-reference": cmd_make_reference,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except (UnknownSchemeError, UsageError) as exc:
        print(f"tddirk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonconvergenceError, MissingReferenceError, OSError) as exc:
        print(f"tddirk: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except DomainError as exc:
        print(f"tddirk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TDDIRKError as exc:
        print(f"tddirk: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
