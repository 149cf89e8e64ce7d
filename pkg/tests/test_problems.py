import math

import numpy as np
import pytest

from tddirk.analysis import stability_function
from tddirk.errors import DomainError
from tddirk.problems import (
    Grid1D,
    Grid2D,
    adr2d,
    advection_source,
    harmonic_oscillator,
)
from tddirk.stepper import IntegrationConfig, integrate, step
from tddirk.tableau import BUILTIN_SCHEMES, get_scheme

BUILTINS = list(BUILTIN_SCHEMES)


# -- harmonic oscillator -----------------------------------------------------

def test_oscillator_examples():
    sys = harmonic_oscillator()
    assert np.array_equal(sys.exact(0.0), [0.0, 1.0, 1.0, 0.0])
    assert np.allclose(sys.exact(math.pi / 2), [-1.0, 0.0, 0.0, 1.0], atol=1e-15)
    assert np.array_equal(sys.g(sys.y0), [0.0, -1.0, -1.0, 0.0])


def test_oscillator_exact_solves_system():
    sys = harmonic_oscillator()
    for t in (0.3, 1.7, 42.0):
        d = 1e-6
        fd = (sys.exact(t + d) - sys.exact(t - d)) / (2 * d)
        assert np.max(np.abs(fd - sys.f(sys.exact(t)))) <= 1e-8


@pytest.mark.parametrize("name", BUILTINS)
@pytest.mark.parametrize("h", [1 / 4, 1 / 16])
def test_oscillator_step_is_stability_function(name, h):
    # each (p, q) pair is w = q + i p with w' = -i w, so one step multiplies w by R(-ih)
    t = get_scheme(name)
    sys = harmonic_oscillator()
    y = np.array([0.3, -1.2, 0.7, 2.0])
    got = step(t, sys, y, h, IntegrationConfig(h, 0.0, 1.0)).y_next
    R = stability_function(t, -1j * h)
    for k in (0, 2):
        w = R * complex(y[k + 1], y[k])
        assert abs(got[k + 1] - w.real) <= 1e-12
        assert abs(got[k] - w.imag) <= 1e-12


# -- advection with source ----------------------------------------------------

def test_grid1d_for_table():
    for N, dx in ((50, 0.04), (100, 0.02), (200, 0.01)):
        g = Grid1D.for_table(N)
        assert g.dx == pytest.approx(dx)
        assert g.x[-1] == pytest.approx(10.0)


@pytest.mark.parametrize("kwargs", [dict(n_cells=10, dx=0.0), dict(n_cells=2, dx=0.1)])
def test_grid1d_validation(kwargs):
    with pytest.raises(DomainError):
        Grid1D(**kwargs)


@pytest.mark.parametrize("amplitude", [0.0, 1.5])
def test_advection_rejects_amplitude(amplitude):
    with pytest.raises(DomainError):
        advection_source(Grid1D.for_table(50), amplitude=amplitude)


def test_advection_equilibria():
    sys = advection_source(Grid1D.for_table(50))
    zero = np.zeros(sys.dimension)
    assert not sys.f(zero).any() and not sys.g(zero).any()
    one = np.ones(sys.dimension)
    one[0] = 0.0  # inflow node
    f1 = sys.f(one)
    assert not f1[2:].any()  # only the cell next to the inflow feels the jump


def test_advection_constant_one_interior():
    sys = advection_source(Grid1D(20, 0.1))
    assert not sys.f(np.ones(sys.dimension))[1:].any()


def test_advection_bump_support():
    sys = advection_source(Grid1D(40, 0.1))
    k = 17
    u = np.zeros(sys.dimension)
    u[k] = 0.3
    assert set(np.flatnonzero(sys.f(u))) == {k, k + 1}


def test_advection_initial_profile():
    sys = advection_source(Grid1D.for_table(100), amplitude=0.5)
    x = Grid1D.for_table(100).x
    inside = (x > 2) & (x < 4)
    assert np.all(sys.y0[inside] == 0.5) and not sys.y0[~inside].any()


def test_advection_mass_without_source():
    grid = Grid1D.for_table(50)
    sys = advection_source(grid, with_source=False)
    masses = []
    integrate(get_scheme("OTDDIRK5s3"), sys, sys.y0, IntegrationConfig(0.02, 0.0, 1.0),
              observer=lambda k, t, u: masses.append(u.sum() * grid.dx))
    assert all(b <= a + 1e-12 for a, b in zip(masses, masses[1:]))


# -- advection-diffusion-reaction ---------------------------------------------

def test_adr_initial_values():
    grid = Grid2D.unit_square(101)
    u0 = adr2d(grid).y0.reshape(101, 101)
    assert u0[50, 50] == pytest.approx(1.3, abs=1e-14)
    for edge in (u0[0], u0[-1], u0[:, 0], u0[:, -1]):
        assert np.allclose(edge, 0.3, rtol=0, atol=1e-15)


def test_adr_equilibrium():
    sys = adr2d(Grid2D.unit_square(21))
    assert np.max(np.abs(sys.f(np.ones(sys.dimension)))) <= 1e-12


def test_grid2d_validation():
    with pytest.raises(DomainError):
        Grid2D(2, 5, 0.1, 0.1)
    with pytest.raises(DomainError):
        Grid2D(5, 5, 0.1, -0.1)


def test_adr_neumann_mirror():
    # a field symmetric about each boundary line has zero normal derivative there
    grid = Grid2D.unit_square(21)
    sys = adr2d(grid, eps=1.0, alpha=0.0, gamma=0.0)
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    u = np.cos(np.pi * X) * np.cos(np.pi * Y)
    lap = sys.f(u.ravel()).reshape(21, 21)
    # central difference Laplacian of this eigenfunction, boundary included
    lam = 2 * (2 * (np.cos(np.pi * grid.dx) - 1) / grid.dx**2)
    assert np.max(np.abs(lap - lam * u)) <= 1e-10


def test_adr_maximum_principle():
    grid = Grid2D.unit_square(21)
    sys = adr2d(grid, alpha=0.0, gamma=0.0)
    peaks = [np.max(np.abs(sys.y0))]
    integrate(get_scheme("OTDDIRK4s2a"), sys, sys.y0, IntegrationConfig(1e-3, 0.0, 1e-2),
              observer=lambda k, t, u: peaks.append(np.max(np.abs(u))))
    assert len(peaks) == 11
    assert all(b <= a + 1e-14 for a, b in zip(peaks, peaks[1:]))


# -- g consistency ---------------------------------------------------------------

@pytest.mark.parametrize("make", [
    harmonic_oscillator,
    lambda: advection_source(Grid1D.for_table(50)),
    lambda: adr2d(Grid2D.unit_square(21)),
], ids=["harmonic", "advection", "adr"])
def test_g_consistency(make):
    sys = make()
    rng = np.random.default_rng(5)
    for _ in range(10):
        y = rng.uniform(0, 1, sys.dimension)
        assert sys.g_consistency_error(y) <= 1e-5
