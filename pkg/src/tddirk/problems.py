"""Benchmark problems as :class:`~tddirk.stepper.ODESystem` constructors.

* ``harmonic_oscillator``: 2D harmonic oscillator, exact solution known.
* ``advection_source``: first-order upwind semi-discretization of
  ``u_t + u_x = u - u**2`` on ``[0, 10]`` with inflow value 0.
* ``adr2d``: ``u_t = eps Lap(u) - alpha (u_x + u_y) + gamma u (u - 1/2)(1 - u)``
  on the unit square, central differences, homogeneous Neumann boundaries.

Every system carries an analytic ``g = f'(y) f(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .stepper import ODESystem

__all__ = [
    "Grid1D",
    "Grid2D",
    "harmonic_oscillator",
    "advection_source",
    "adr2d",
    "linear_system",
]

ADVECTION_LENGTH = 10.0
ADVECTION_AMPLITUDE = 0.5


def linear_system(M, y0=None, name="linear"):
    """``y' = M y`` with ``g = M**2 y`` (exact flow attached when ``y0`` is given)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    M2 = M @ M
    exact = None
    if y0 is not None:
        from scipy.linalg import expm

        y0 = np.asarray(y0, dtype=float)
        exact = lambda t: expm(t * M) @ y0  # noqa: E731
    return ODESystem(
        dimension=M.shape[0],
        f=lambda y: M @ y,
        g=lambda y: M2 @ y,
        exact=exact,
        y0=y0,
        name=name,
    )


def _oscillator_exact(t):
    s, c = np.sin(t), np.cos(t)
    return np.array([-s, c, c, s])


def harmonic_oscillator():
    """State ``(p1, q1, p2, q2)`` with ``p' = -q``, ``q' = p``; starts at ``(0, 1, 1, 0)``."""

    def f(y):
        return np.array([-y[1], y[0], -y[3], y[2]])

    def g(y):
        return -y

    return ODESystem(
        dimension=4,
        f=f,
        g=g,
        exact=_oscillator_exact,
        y0=np.array([0.0, 1.0, 1.0, 0.0]),
        name="harmonic",
    )


@dataclass(frozen=True)
class Grid1D:
    """Uniform nodes ``x_left + i * dx`` for ``i = 0..n_cells``."""

    n_cells: int
    dx: float
    x_left: float = 0.0

    def __post_init__(self):
        if not self.dx > 0:
            raise DomainError("dx must be positive")
        if int(self.n_cells) < 3:
            raise DomainError("need at least 3 cells")

    @classmethod
    def for_table(cls, N, length=ADVECTION_LENGTH):
        """Grid with ``dx = 2 / N`` covering ``[0, length]``."""
        dx = 2.0 / N
        return cls(int(round(length / dx)), dx, 0.0)

    @property
    def x(self):
        return self.x_left + np.arange(self.n_cells + 1) * self.dx


def advection_source(grid, amplitude=ADVECTION_AMPLITUDE, with_source=True):
    """Upwind ``u_t + u_x = u - u**2`` with the inflow node held at 0.

    The initial state is ``amplitude`` on ``2 < x < 4`` and 0 elsewhere.
    """
    if not 0 < amplitude <= 1:
        raise DomainError("amplitude must lie in (0, 1]")
    inv_dx = 1.0 / grid.dx
    src = 1.0 if with_source else 0.0

    def f(u):
        r = np.empty_like(u)
        r[0] = 0.0
        r[1:] = -inv_dx * (u[1:] - u[:-1]) + src * (u[1:] - u[1:] * u[1:])
        return r

    def g(u):
        F = f(u)
        r = np.empty_like(u)
        r[0] = 0.0
        r[1:] = -inv_dx * (F[1:] - F[:-1]) + src * (1.0 - 2.0 * u[1:]) * F[1:]
        return r

    x = grid.x
    u0 = np.where((x > 2.0) & (x < 4.0), float(amplitude), 0.0)
    return ODESystem(
        dimension=x.size,
        f=f,
        g=g,
        y0=u0,
        name="advection",
    )


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self):
        if not (self.dx > 0 and self.dy > 0):
            raise DomainError("spacings must be positive")
        if self.nx < 3 or self.ny < 3:
            raise DomainError("need at least 3 points per direction")

    @classmethod
    def unit_square(cls, points=101):
        h = 1.0 / (points - 1)
        return cls(points, points, h, h)

    @property
    def x(self):
        return np.arange(self.nx) * self.dx

    @property
    def y(self):
        return np.arange(self.ny) * self.dy


def _neumann_1d(n, d):
    """Second- and first-derivative matrices with mirror ghost nodes."""
    D2 = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n), format="lil")
    D2[0, 1] = 2.0
    D2[n - 1, n - 2] = 2.0
    D1 = sp.diags([-1.0, 0.0, 1.0], [-1, 0, 1], shape=(n, n), format="lil")
    D1[0, 1] = 0.0
    D1[n - 1, n - 2] = 0.0
    return D2.tocsr() / (d * d), D1.tocsr() / (2.0 * d)


def adr2d(grid, eps=0.01, alpha=-10.0, gamma=100.0):
    """Advection-diffusion-reaction on the unit square; state is ``u.ravel()`` (x-major)."""
    D2x, D1x = _neumann_1d(grid.nx, grid.dx)
    D2y, D1y = _neumann_1d(grid.ny, grid.dy)
    Ix = sp.identity(grid.nx, format="csr")
    Iy = sp.identity(grid.ny, format="csr")
    lap = sp.kron(D2x, Iy) + sp.kron(Ix, D2y)
    div = sp.kron(D1x, Iy) + sp.kron(Ix, D1y)
    L = (eps * lap - alpha * div).tocsr()

    def f(u):
        return L @ u + gamma * (u * (u - 0.5) * (1.0 - u))

    def g(u):
        F = f(u)
        return L @ F + (gamma * (-3.0 * u * u + 3.0 * u - 0.5)) * F

    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    u0 = 0.3 + 256.0 * (X * (1.0 - X) * Y * (1.0 - Y)) ** 2
    system = ODESystem(
        dimension=grid.nx * grid.ny,
        f=f,
        g=g,
        y0=u0.ravel(),
        name="adr",
    )
    system.operator = L
    return system
