"""Convergence studies, benchmarks and reference solutions.

``run_case`` is the single code path that turns (scheme, problem, h) into an
error value; both convergence reports and benchmark records go through it,
so the two always agree bit for bit.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NonconvergenceError
from .io import ReferenceSolution, load_reference
from .problems import (
    ADVECTION_AMPLITUDE,
    Grid1D,
    Grid2D,
    adr2d,
    advection_source,
    harmonic_oscillator,
)
from .stepper import IntegrationConfig, integrate, step_count
from .tableau import get_scheme

__all__ = [
    "ProblemSetup",
    "build_problem",
    "PROBLEM_NAMES",
    "RunRecord",
    "ConvergenceReport",
    "MissingReferenceError",
    "run_case",
    "timed_run",
    "converge",
    "bench",
    "fit_slope",
    "make_reference",
    "reference_path",
    "REFERENCE_SCHEME",
    "ERROR_FLOOR",
    "records_to_csv",
    "convergence_to_csv",
    "loglog_svg",
]

PROBLEM_NAMES = ("harmonic", "advection", "adr")
REFERENCE_SCHEME = "OTDDIRK5s3"
REFERENCE_REFINEMENT = 100
ERROR_FLOOR = 1e-12


class MissingReferenceError(DomainError):
    """No cached reference solution for a problem without a closed form."""


@dataclass
class ProblemSetup:
    """A problem instance plus everything needed to measure errors on it."""

    name: str
    key: str
    params: dict
    system: object
    t0: float
    t_end: float
    default_h: list
    over_trajectory: bool = False
    exact: Optional[Callable[[float], np.ndarray]] = None
    dx: Optional[float] = None

    @property
    def y0(self):
        return self.system.y0


def build_problem(name, *, N=50, amplitude=ADVECTION_AMPLITUDE, points=101,
                  coarse=False, eps=0.01, alpha=-10.0, gamma=100.0, t_end=None):
    """Construct one of the benchmark problems with its default experiment settings.

    Advection errors default to the maximum over the step times of the run;
    the other problems compare final states only.
    """
    if name == "harmonic":
        sys = harmonic_oscillator()
        return ProblemSetup(
            name="harmonic", key="harmonic", params={}, system=sys,
            t0=0.0, t_end=100.0 if t_end is None else float(t_end),
            default_h=[1 / 4, 1 / 8, 1 / 16, 1 / 32], exact=sys.exact,
        )
    if name == "advection":
        grid = Grid1D.for_table(N)
        sys = advection_source(grid, amplitude=amplitude)
        return ProblemSetup(
            name="advection", key=f"advection-N{N}-amp{amplitude:g}",
            params={"N": N, "amplitude": amplitude}, system=sys,
            t0=0.0, t_end=1.4 if t_end is None else float(t_end),
            default_h=[0.02], over_trajectory=True, dx=grid.dx,
        )
    if name == "adr":
        grid = Grid2D.unit_square(21 if coarse else points)
        sys = adr2d(grid, eps=eps, alpha=alpha, gamma=gamma)
        te = 0.08 if t_end is None else float(t_end)
        return ProblemSetup(
            name="adr", key=f"adr-n{grid.nx}-eps{eps:g}-alpha{alpha:g}-gamma{gamma:g}",
            params={"points": grid.nx, "eps": eps, "alpha": alpha, "gamma": gamma},
            system=sys, t0=0.0, t_end=te,
            default_h=[te / m for m in (50, 100, 200, 400)], dx=grid.dx,
        )
    raise DomainError(f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}")


@dataclass
class RunRecord:
    scheme: str
    problem: str
    h: float
    error: float
    wall_time: float
    total_fp_iterations: int


@dataclass
class ConvergenceReport:
    scheme: str
    pairs: list
    fitted_slope: Optional[float]
    excluded: list = field(default_factory=list)


def fit_slope(pairs, floor=ERROR_FLOOR):
    """Least-squares slope of log(error) against log(h).

    Points that are NaN or below ``floor`` are excluded. Returns
    ``(slope or None, excluded_h_values)``.
    """
    keep = [(h, e) for h, e in pairs if math.isfinite(e) and e >= floor]
    excluded = [h for h, e in pairs if not (math.isfinite(e) and e >= floor)]
    if len(keep) < 2:
        return None, excluded
    x = np.log([h for h, _ in keep])
    y = np.log([e for _, e in keep])
    return float(np.polyfit(x, y, 1)[0]), excluded


def reference_path(setup, cache_dir):
    return Path(cache_dir) / f"{setup.key}.ref"


def _make_reference_command(setup, cache_dir):
    flags = [f"--problem {setup.name}"]
    p = setup.params
    if setup.name == "advection":
        flags += [f"--N {p['N']}", f"--amplitude {p['amplitude']:g}"]
    elif setup.name == "adr":
        flags.append("--coarse" if p["points"] == 21 else f"--points {p['points']}")
    flags.append(f"--t-end {setup.t_end:g}")
    flags.append(f"--cache-dir {cache_dir}")
    return "tddirk make-reference " + " ".join(flags)


def _load_reference_for(setup, cache_dir):
    path = reference_path(setup, cache_dir)
    if not path.exists():
        raise MissingReferenceError(
            f"no reference solution for {setup.key} at {path}; generate it with "
            f"'{_make_reference_command(setup, cache_dir)}'"
        )
    ref = load_reference(path)
    if ref.key != setup.key or abs(ref.t_end - setup.t_end) > 1e-12:
        raise MissingReferenceError(
            f"{path} was made for {ref.key} up to t={ref.t_end}, not {setup.key} up to "
            f"t={setup.t_end}; regenerate it with '{_make_reference_command(setup, cache_dir)}'"
        )
    return ref


def run_case(scheme, setup, h, *, reference=None, cache_dir=None,
             over_trajectory=None, fp_tol=1e-12, fp_max_iter=200):
    """Integrate once and return ``(error, total_fp_iterations)``.

    The error is the max norm against the exact solution or the cached
    reference, either at the final time or (``over_trajectory``) maximized
    over all step times. Stage nonconvergence gives a NaN error.
    """
    t = get_scheme(scheme) if isinstance(scheme, str) else scheme
    if over_trajectory is None:
        over_trajectory = setup.over_trajectory
    if setup.exact is None and reference is None:
        if cache_dir is None:
            raise MissingReferenceError(
                f"{setup.name} has no exact solution; pass a cache directory holding "
                "a reference made by 'tddirk make-reference'"
            )
        reference = _load_reference_for(setup, cache_dir)

    def truth(tk):
        if setup.exact is not None:
            return setup.exact(tk)
        k = reference.sample_index(tk)
        if k is None:
            raise MissingReferenceError(
                f"reference {reference.key} has no sample at t={tk!r} (sample spacing "
                f"{reference.sample_dt!r}); regenerate it with 'tddirk make-reference "
                f"--h-finest {h!r}'"
            )
        return reference.states[k]

    if over_trajectory and reference is not None:
        truth(setup.t0 + h)  # fail fast on a reference sampled too coarsely
    worst = [0.0]

    def observer(k, tk, y):
        worst[0] = max(worst[0], float(np.max(np.abs(y - truth(tk)))))

    cfg = IntegrationConfig(h=h, t0=setup.t0, t_end=setup.t_end,
                            fp_tol=fp_tol, fp_max_iter=fp_max_iter)
    try:
        # a diverging run is a recorded outcome (NaN), not a warning
        with np.errstate(over="ignore", invalid="ignore"):
            res = integrate(t, setup.system, setup.y0, cfg,
                            observer=observer if over_trajectory else None)
    except NonconvergenceError as exc:
        return math.nan, exc.iterations
    if not np.all(np.isfinite(res.y)):
        return math.nan, res.total_iterations
    if over_trajectory:
        return worst[0], res.total_iterations
    return float(np.max(np.abs(res.y - truth(setup.t_end)))), res.total_iterations


def timed_run(scheme, setup, h, repeats=3, **kwargs):
    """``run_case`` repeated ``repeats`` times; the record carries the median wall time."""
    name = scheme if isinstance(scheme, str) else scheme.name
    times = []
    error = iters = None
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        e, it = run_case(scheme, setup, h, **kwargs)
        times.append(time.perf_counter() - start)
        if error is None:
            error, iters = e, it
    return RunRecord(name, setup.key, h, error, statistics.median(times), iters)


def converge(scheme, setup, h_list=None, floor=ERROR_FLOOR, **kwargs):
    h_list = sorted(setup.default_h if h_list is None else h_list, reverse=True)
    name = scheme if isinstance(scheme, str) else scheme.name
    if "cache_dir" in kwargs and setup.exact is None and kwargs.get("reference") is None:
        kwargs["reference"] = _load_reference_for(setup, kwargs["cache_dir"])
    pairs = [(h, run_case(scheme, setup, h, **kwargs)[0]) for h in h_list]
    slope, excluded = fit_slope(pairs, floor)
    return ConvergenceReport(name, pairs, slope, excluded)


def bench(schemes, setup, h_list=None, repeats=3, **kwargs):
    h_list = sorted(setup.default_h if h_list is None else h_list, reverse=True)
    if "cache_dir" in kwargs and setup.exact is None and kwargs.get("reference") is None:
        if schemes:
            kwargs["reference"] = _load_reference_for(setup, kwargs["cache_dir"])
    return [timed_run(s, setup, h, repeats=repeats, **kwargs) for s in schemes for h in h_list]


def make_reference(setup, h_finest, cache_dir=None, scheme=REFERENCE_SCHEME,
                   refinement=REFERENCE_REFINEMENT, sample_dt=None):
    """Integrate with ``h_finest / refinement`` and keep samples every ``sample_dt``.

    ``sample_dt`` defaults to ``h_finest`` for problems measured over the
    trajectory and to the whole interval (final state only) otherwise.
    """
    if sample_dt is None:
        sample_dt = h_finest if setup.over_trajectory else setup.t_end - setup.t0
    h_ref = h_finest / refinement
    stride = round(sample_dt / h_ref)
    if stride < 1 or abs(stride * h_ref - sample_dt) > 1e-9 * sample_dt:
        raise DomainError("sample_dt must be a multiple of h_finest / refinement")
    samples = [setup.y0.copy()]
    n_full, tail = step_count(setup.t0, setup.t_end, h_ref)
    n_steps = n_full + (tail > 0)

    def observer(k, tk, y):
        # regular samples strictly before the end; the final state always
        if k == n_steps or (k % stride == 0 and k < n_steps):
            samples.append(y.copy())

    t = get_scheme(scheme)
    cfg = IntegrationConfig(h=h_ref, t0=setup.t0, t_end=setup.t_end)
    integrate(t, setup.system, setup.y0, cfg, observer=observer)
    states = np.array(samples)
    ref = ReferenceSolution(
        problem=setup.name, key=setup.key, params=setup.params, scheme=t.name,
        h_ref=h_ref, t0=setup.t0, t_end=setup.t_end, sample_dt=sample_dt, states=states,
    )
    if cache_dir is not None:
        ref.save(reference_path(setup, cache_dir))
    return ref


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def records_to_csv(records):
    lines = ["scheme,problem,h,error,wall_time,total_fp_iterations"]
    for r in records:
        lines.append(",".join(_fmt(v) for v in (
            r.scheme, r.problem, r.h, r.error, r.wall_time, r.total_fp_iterations)))
    return "\n".join(lines) + "\n"


def convergence_to_csv(reports):
    lines = ["scheme,h,error,excluded,fitted_slope"]
    for rep in reports:
        slope = "n/a" if rep.fitted_slope is None else repr(rep.fitted_slope)
        for h, e in rep.pairs:
            lines.append(f"{rep.scheme},{h!r},{_fmt(e)},{int(h in rep.excluded)},{slope}")
    return "\n".join(lines) + "\n"


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def loglog_svg(series, title="", xlabel="h", ylabel="error", width=640, height=440):
    """Log-log line chart of ``{label: [(x, y), ...]}``; non-positive or NaN points are skipped."""
    from .analysis import _escape

    pts = {k: [(x, y) for x, y in v if x > 0 and math.isfinite(y) and y > 0]
           for k, v in series.items()}
    allp = [p for v in pts.values() for p in v]
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-size="14">'
           f'{_escape(title)}</text>']
    if allp:
        lx = [math.log10(x) for x, _ in allp]
        ly = [math.log10(y) for _, y in allp]
        x0, x1 = math.floor(min(lx)), math.ceil(max(lx))
        y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1

        def X(x):
            return left + (math.log10(x) - x0) / (x1 - x0) * pw

        def Y(y):
            return top + (y1 - math.log10(y)) / (y1 - y0) * ph

        for e in range(x0, x1 + 1):
            px = left + (e - x0) / (x1 - x0) * pw
            out.append(f'<line x1="{px:.1f}" y1="{top}" x2="{px:.1f}" y2="{top + ph}" stroke="#ddd"/>')
            out.append(f'<text x="{px:.1f}" y="{top + ph + 16}" text-anchor="middle" '
                       f'font-size="11">1e{e}</text>')
        for e in range(y0, y1 + 1):
            py = top + (y1 - e) / (y1 - y0) * ph
            out.append(f'<line x1="{left}" y1="{py:.1f}" x2="{left + pw}" y2="{py:.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{left - 6}" y="{py + 4:.1f}" text-anchor="end" '
                       f'font-size="11">1e{e}</text>')
        for i, (label, v) in enumerate(pts.items()):
            colour = _PALETTE[i % len(_PALETTE)]
            v = sorted(v)
            if v:
                path = " ".join(f"{X(x):.1f},{Y(y):.1f}" for x, y in v)
                out.append(f'<polyline points="{path}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
                for x, y in v:
                    out.append(f'<circle cx="{X(x):.1f}" cy="{Y(y):.1f}" r="3" fill="{colour}"/>')
            ly_ = top + 14 + 18 * i
            out.append(f'<line x1="{left + pw + 12}" y1="{ly_}" x2="{left + pw + 32}" y2="{ly_}" '
                       f'stroke="{colour}" stroke-width="2"/>')
            out.append(f'<text x="{left + pw + 38}" y="{ly_ + 4}" font-size="11">{_escape(label)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle" '
               f'font-size="12">{_escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {top + ph / 2})">{_escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
