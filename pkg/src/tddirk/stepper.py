"""Fixed-step TDDIRK time integration with fixed-point stage solves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NonconvergenceError

__all__ = [
    "ODESystem",
    "IntegrationConfig",
    "StepReport",
    "IntegrationResult",
    "finite_difference_g",
    "solve_stage",
    "step",
    "integrate",
    "step_count",
]


def finite_difference_g(f):
    """Directional-difference approximation of ``g(y) = f'(y) f(y)``.

    Lower accuracy than an analytic ``g`` (about half the working digits);
    only meant for systems that do not provide one.
    """
    sqrt_eps = math.sqrt(np.finfo(float).eps)

    def g(y):
        fy = f(y)
        eps = sqrt_eps * (1.0 + np.linalg.norm(y)) / (1.0 + np.linalg.norm(fy))
        return (f(y + eps * fy) - fy) / eps

    return g


@dataclass
class ODESystem:
    """Autonomous system ``y' = f(y)`` together with ``g(y) = f'(y) f(y)``.

    If ``g`` is omitted a finite-difference fallback is installed and
    ``g_is_approximate`` is set.
    """

    dimension: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact: Optional[Callable[[float], np.ndarray]] = None
    y0: Optional[np.ndarray] = None
    name: str = "system"
    g_is_approximate: bool = field(default=False)

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise DomainError("dimension must be positive")
        if self.g is None:
            self.g = finite_difference_g(self.f)
            self.g_is_approximate = True
        if self.y0 is not None:
            self.y0 = np.asarray(self.y0, dtype=float)
            if self.y0.shape != (self.dimension,):
                raise DomainError(f"y0 has shape {self.y0.shape}, expected ({self.dimension},)")

    def g_consistency_error(self, y, eps=None):
        """Relative gap between ``g(y)`` and a central difference of ``f`` along ``f(y)``."""
        y = np.asarray(y, dtype=float)
        fy = self.f(y)
        nf = np.linalg.norm(fy)
        if nf == 0.0:
            return float(np.linalg.norm(self.g(y)))
        if eps is None:
            eps = 1e-5 * (1.0 + np.linalg.norm(y)) / nf
        fd = (self.f(y + eps * fy) - self.f(y - eps * fy)) / (2.0 * eps)
        gy = self.g(y)
        return float(np.linalg.norm(gy - fd) / max(np.linalg.norm(fd), np.finfo(float).tiny))


@dataclass(frozen=True)
class IntegrationConfig:
    h: float
    t0: float
    t_end: float
    fp_tol: float = 1e-12
    fp_max_iter: int = 200

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("h must be positive")
        if not self.t0 < self.t_end:
            raise DomainError("t0 must be smaller than t_end")
        if not self.fp_tol > 0:
            raise DomainError("fp_tol must be positive")
        if int(self.fp_max_iter) < 1:
            raise DomainError("fp_max_iter must be at least 1")


@dataclass
class StepReport:
    y_next: np.ndarray
    stage_iterations: list
    converged: bool = True


def solve_stage(t, sys, y_n, h, i, prior_g, cfg, f_n=None):
    """Solve stage ``i`` (0-based) by fixed-point iteration.

    Iterates ``Y <- known + h**2 a_ii g(Y)`` from ``Y = y_n + c_i h f(y_n)``
    until successive iterates differ by less than ``cfg.fp_tol`` in the
    2-norm. Returns ``(Y_i, iterations)``.
    """
    if f_n is None:
        f_n = sys.f(y_n)
    A = t.A
    h2 = h * h
    start = y_n + (t.c[i] * h) * f_n
    known = start.copy()
    for j in range(i):
        if A[i, j] != 0.0:
            known += (h2 * A[i, j]) * prior_g[j]
    aii = A[i, i]
    if aii == 0.0:
        return known, 1

    coef = h2 * aii
    Y = start
    diff = math.inf
    for r in range(1, cfg.fp_max_iter + 1):
        Y_new = known + coef * sys.g(Y)
        diff = float(np.linalg.norm(Y_new - Y))
        Y = Y_new
        if diff < cfg.fp_tol:
            return Y, r
        if not math.isfinite(diff):
            raise NonconvergenceError(i, r, diff)
    raise NonconvergenceError(i, cfg.fp_max_iter, diff)


def step(t, sys, y_n, h, cfg, raise_on_failure=True):
    """One TDDIRK step of size ``h`` from ``y_n``; stages solved in order."""
    y_n = np.asarray(y_n, dtype=float)
    f_n = sys.f(y_n)
    stage_g = []
    iterations = []
    try:
        for i in range(t.s):
            Y, its = solve_stage(t, sys, y_n, h, i, stage_g, cfg, f_n=f_n)
            stage_g.append(sys.g(Y))
            iterations.append(its)
    except NonconvergenceError as exc:
        if raise_on_failure:
            raise
        iterations.append(exc.iterations)
        return StepReport(np.full_like(y_n, np.nan), iterations, converged=False)

    y_next = y_n + h * f_n
    h2 = h * h
    for bi, gi in zip(t.b, stage_g):
        if bi != 0.0:
            y_next = y_next + (h2 * bi) * gi
    return StepReport(y_next, iterations, True)


def step_count(t0, t_end, h, rel_tol=1e-9):
    """Number of full steps and the length of a trailing partial step (0.0 if none)."""
    ratio = (t_end - t0) / h
    n = round(ratio)
    if n >= 1 and abs(ratio - n) <= rel_tol * max(1.0, ratio):
        return int(n), 0.0
    n = int(math.floor(ratio))
    return n, (t_end - t0) - n * h


@dataclass
class IntegrationResult:
    y: np.ndarray
    t: float
    total_iterations: int
    n_steps: int
    times: Optional[np.ndarray] = None
    states: Optional[np.ndarray] = None

    def sample(self, time):
        """State recorded at a step time (requires ``record=True``)."""
        if self.times is None:
            raise DomainError("trajectory was not recorded; integrate with record=True")
        k = int(np.argmin(np.abs(self.times - time)))
        if not math.isclose(self.times[k], time, rel_tol=1e-12, abs_tol=1e-12):
            raise DomainError(f"t={time!r} is not a recorded step time")
        return self.states[k]


def integrate(t, sys, y0, cfg, record=False, observer=None):
    """Fixed-step integration from ``cfg.t0`` to exactly ``cfg.t_end``.

    All steps use ``cfg.h`` except possibly a final shortened one.
    ``observer(k, t_k, y_k)`` is called after every step when given.
    """
    y = np.array(y0, dtype=float)
    n_full, tail = step_count(cfg.t0, cfg.t_end, cfg.h)
    sizes = [cfg.h] * n_full + ([tail] if tail > 0 else [])
    times = [cfg.t0]
    states = [y.copy()] if record else None
    total = 0
    for k, hk in enumerate(sizes, start=1):
        try:
            report = step(t, sys, y, hk, cfg)
        except NonconvergenceError as exc:
            raise exc.at_step(k, times[-1] + hk if k <= n_full else cfg.t_end) from None
        y = report.y_next
        total += sum(report.stage_iterations)
        tk = cfg.t_end if k == len(sizes) else cfg.t0 + k * cfg.h
        if record:
            times.append(tk)
            states.append(y.copy())
        else:
            times[-1] = tk
        if observer is not None:
            observer(k, tk, y)
    return IntegrationResult(
        y=y,
        t=cfg.t_end,
        total_iterations=total,
        n_steps=len(sizes),
        times=np.array(times) if record else None,
        states=np.array(states) if record else None,
    )
