"""Acceptance criteria, one test each.

A summary line ``criterion N: PASS|FAIL`` per test is printed at the end of
the pytest run (see ``conftest.py``).
"""

import math
import time

import numpy as np
import pytest

from tddirk import families
from tddirk.analysis import DEFAULT_WINDOW, estimate_phase_expansion, stability_function, stability_region
from tddirk.cli import PHASE_REL_TOL, PHASE_TARGETS
from tddirk.errors import NonconvergenceError
from tddirk.experiments import build_problem, converge, make_reference, run_case
from tddirk.problems import linear_system
from tddirk.stepper import IntegrationConfig, solve_stage, step
from tddirk.tableau import (
    BUILTIN_SCHEMES,
    get_scheme,
    order_condition_residuals,
    row_assumption_residuals,
)

BUILTINS = list(BUILTIN_SCHEMES)


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def _worst(pairs):
    return max(pairs, key=lambda p: p[1])


@pytest.mark.criterion(1, "order-condition residuals <= 1e-13")
def test_criterion_1_order_conditions():
    with Clock() as clock:
        res = []
        for name in BUILTINS:
            t = get_scheme(name)
            res += [(f"{name} {r.condition_id}", abs(r.value)) for r in row_assumption_residuals(t)]
            res += [(f"{name} {r.condition_id}", abs(r.value))
                    for r in order_condition_residuals(t, t.claimed_order)]
    where, worst = _worst(res)
    assert worst <= 1e-13, f"{where}: residual {worst:.2e}"
    assert clock.elapsed < 1.0


@pytest.mark.criterion(2, "derived tableaux match the registry within 1e-13")
def test_criterion_2_derivations():
    with Clock() as clock:
        derived = {
            "OTDDIRK4s2a": families.tddirk4s2(families.solve_property_I()[0]),
            "OTDDIRK4s2b": families.tddirk4s2(families.solve_property_II()),
            "TDDIRK5s2": families.tddirk5s2(),
            "OTDDIRK5s3": families.tddirk5s3_family(
                families.FamilyParams3s5(families.solve_optimal_c2()[0])),
        }
        diffs = []
        for name, t in derived.items():
            u = get_scheme(name)
            d = max(np.max(np.abs(t.A - u.A)), np.max(np.abs(t.b - u.b)), np.max(np.abs(t.c - u.c)))
            diffs.append((name, float(d)))
    where, worst = _worst(diffs)
    assert worst <= 1e-13, f"{where}: max entry difference {worst:.2e}"
    assert clock.elapsed < 1.0


@pytest.mark.criterion(3, "phase orders exact, constants within 1% of the published table")
def test_criterion_3_phase_table():
    misses = []
    with Clock() as clock:
        for name in BUILTINS:
            p, cp, q, cq = PHASE_TARGETS[name]
            est = estimate_phase_expansion(get_scheme(name))
            if (est.dispersion_order, est.dissipation_order) != (p, q):
                misses.append(f"{name} orders {est.dispersion_order}/{est.dissipation_order} != {p}/{q}")
            for label, got, want in (("dispersion", est.dispersion_constant, cp),
                                     ("dissipation", est.dissipation_constant, cq)):
                if abs(abs(got) - want) > PHASE_REL_TOL * want:
                    misses.append(f"{name} {label} {abs(got):.6e} vs {want:.6e}")
    assert not misses, "; ".join(misses)
    assert clock.elapsed < 5.0


@pytest.mark.criterion(4, "harmonic oscillator convergence slopes")
def test_criterion_4_convergence():
    setup = build_problem("harmonic")
    with Clock() as clock:
        reports = {name: converge(name, setup) for name in BUILTINS}
    for name, rep in reports.items():
        need = 3.7 if get_scheme(name).claimed_order == 4 else 4.7
        assert rep.fitted_slope is not None and rep.fitted_slope >= need, \
            f"{name}: slope {rep.fitted_slope} < {need}"
    err_5s3 = dict(reports["OTDDIRK5s3"].pairs)[1 / 32]
    assert err_5s3 <= 1e-11, f"OTDDIRK5s3 error {err_5s3:.2e} at h = 1/32"
    assert clock.elapsed < 30.0


def _dense_step(t, M, y, h):
    n = len(y)
    M2 = M @ M
    f = M @ y
    gs = []
    for i in range(t.s):
        rhs = y + t.c[i] * h * f + h * h * sum(t.A[i, j] * gs[j] for j in range(i))
        gs.append(M2 @ np.linalg.solve(np.eye(n) - h * h * t.A[i, i] * M2, rhs))
    return y + h * f + h * h * sum(bi * gi for bi, gi in zip(t.b, gs))


@pytest.mark.criterion(5, "fixed-point stages match dense solves within 1e-11")
def test_criterion_5_stage_oracle():
    rng = np.random.default_rng(2024)
    h = 0.1
    cfg = IntegrationConfig(h, 0.0, 1.0)
    worst = 0.0
    with Clock() as clock:
        for _ in range(20):
            M = rng.standard_normal((5, 5))
            M *= 0.3 / (h * np.linalg.norm(M, 2))
            y = rng.standard_normal(5)
            sys = linear_system(M)
            for name in BUILTINS:
                t = get_scheme(name)
                got = step(t, sys, y, h, cfg).y_next
                worst = max(worst, float(np.max(np.abs(got - _dense_step(t, M, y, h)))))
    assert worst <= 1e-11, f"max deviation {worst:.2e}"
    assert clock.elapsed < 5.0


@pytest.mark.criterion(6, "stability region properties and 600x1200 raster")
def test_criterion_6_stability(tmp_path):
    for name in BUILTINS:
        t = get_scheme(name)
        assert abs(stability_function(t, 0) - 1) <= 1e-12
        top = max(abs(stability_function(t, x)) for x in np.linspace(-2, 0, 100))
        assert top <= 1.0, f"{name}: |R| = {top!r} on [-2, 0]"
        with Clock() as clock:
            grid = stability_region(t, DEFAULT_WINDOW, nx=600, ny=1200)
            grid.to_ppm(tmp_path / f"{name}.ppm")
            grid.to_svg(tmp_path / f"{name}.svg", title=name)
        assert clock.elapsed < 10.0, f"{name}: raster took {clock.elapsed:.1f} s"
        v = grid.values
        fin = np.isfinite(v) & np.isfinite(v[:, ::-1])
        gap = float(np.max(np.abs(v[fin] - v[:, ::-1][fin])))
        assert gap <= 1e-13, f"{name}: conjugate asymmetry {gap:.2e}"
        assert (tmp_path / f"{name}.ppm").stat().st_size == len(b"P6\n600 1200\n255\n") + 600 * 1200 * 3
        assert "<path" in (tmp_path / f"{name}.svg").read_text()


@pytest.mark.criterion(7, "stage solver step restriction")
def test_criterion_7_step_restriction():
    h = 0.1
    cfg = IntegrationConfig(h, 0.0, 1.0, fp_tol=1e-12)
    checked = 0
    for name in BUILTINS:
        t = get_scheme(name)
        for i in range(t.s):
            a = t.A[i, i]
            if a == 0:
                continue
            prior = [np.zeros(1)] * i
            lam = math.sqrt(1.5 / (h * h * a))
            with pytest.raises(NonconvergenceError):
                solve_stage(t, linear_system([[lam]]), np.array([1.0]), h, i, prior, cfg)
            lam = math.sqrt(0.5 / (h * h * a))
            _, its = solve_stage(t, linear_system([[lam]]), np.array([1.0]), h, i, prior, cfg)
            assert its <= 60, f"{name} stage {i}: {its} iterations"
            checked += 1
    assert checked == 8  # every implicit stage of the built-ins


@pytest.fixture(scope="module")
def advection_refs(tmp_path_factory):
    cache = tmp_path_factory.mktemp("advection-refs")
    setups = {N: build_problem("advection", N=N) for N in (50, 100, 200)}
    refs = {N: make_reference(s, 0.02, cache_dir=cache) for N, s in setups.items()}
    return setups, refs


def _rank(e):
    return math.inf if math.isnan(e) else e


@pytest.mark.criterion(8, "advection table: OTDDIRK5s3 magnitude and ordering")
def test_criterion_8_advection(advection_refs):
    setups, refs = advection_refs
    errs = {(name, N): run_case(name, setups[N], 0.02, reference=refs[N])[0]
            for name in ("OTDDIRK5s3", "TDDIRK5s2") for N in setups}
    e50 = errs["OTDDIRK5s3", 50]
    assert 1.86e-7 / 3 <= e50 <= 3 * 1.86e-7, f"OTDDIRK5s3 N=50 error {e50:.3e}"
    for N in setups:
        assert _rank(errs["OTDDIRK5s3", N]) < _rank(errs["TDDIRK5s2", N]), \
            f"N={N}: {errs['OTDDIRK5s3', N]:.3e} vs {errs['TDDIRK5s2', N]:.3e}"


@pytest.mark.criterion(9, "ADR self-convergence on the 101x101 grid")
def test_criterion_9_adr(tmp_path):
    with Clock() as clock:
        setup = build_problem("adr")
        h_list = setup.default_h
        ref = make_reference(setup, min(h_list), cache_dir=tmp_path)
        slopes = {name: converge(name, setup, h_list, reference=ref) for name in BUILTINS}
    for name, rep in slopes.items():
        need = get_scheme(name).claimed_order - 0.5
        assert rep.fitted_slope is not None and rep.fitted_slope >= need, \
            f"{name}: slope {rep.fitted_slope} < {need}"
    assert clock.elapsed < 120.0, f"took {clock.elapsed:.0f} s"
