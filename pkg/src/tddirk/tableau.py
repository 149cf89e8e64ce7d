"""Butcher tableaux for two-derivative DIRK methods.

A TDDIRK method advances ``y' = f(y)`` using ``g(y) = f'(y) f(y)``::

    Y_i     = y_n + c_i h f(y_n) + h**2 * sum_{j<=i} a_ij g(Y_j)
    y_{n+1} = y_n + h f(y_n)     + h**2 * sum_i    b_i  g(Y_i)

This module holds the tableau value type, the order-condition residuals up
to order six, and a registry of named schemes (the four optimized schemes
ship built in; others can be loaded from JSON).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DomainError, UnknownSchemeError

__all__ = [
    "ButcherTableau",
    "ConditionResidual",
    "ORDER_CONDITIONS",
    "row_assumption_residuals",
    "order_condition_residuals",
    "classify_order",
    "SchemeRegistry",
    "default_registry",
    "get_scheme",
    "register_scheme",
    "load_tableau_json",
    "tableau_from_dict",
    "tableau_to_dict",
    "BUILTIN_SCHEMES",
]

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class ButcherTableau:
    """Coefficients ``(A, b, c)`` of an s-stage TDDIRK method.

    ``A`` is lower triangular; entries above the diagonal must be exactly
    zero. Arrays are copied and made read-only on construction.
    """

    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    claimed_order: int

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        c = np.array(self.c, dtype=float).reshape(-1)
        s = b.size
        if s < 1:
            raise DomainError("a tableau needs at least one stage")
        if A.shape != (s, s) or c.size != s:
            raise DomainError(
                f"inconsistent shapes: A {A.shape}, b ({b.size},), c ({c.size},)"
            )
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise DomainError(f"tableau {self.name!r} has non-finite entries")
        upper = np.triu(A, k=1)
        if np.any(upper != 0.0):
            i, j = np.argwhere(upper != 0.0)[0]
            raise DomainError(
                f"tableau {self.name!r} is not diagonally implicit: a[{i + 1},{j + 1}] = {float(A[i, j])!r}"
            )
        if int(self.claimed_order) < 1:
            raise DomainError("claimed_order must be a positive integer")
        for arr in (A, b, c):
            arr.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "claimed_order", int(self.claimed_order))

    @property
    def s(self):
        return self.b.size

    @property
    def stages(self):
        return self.b.size

    def with_order(self, claimed_order):
        return ButcherTableau(self.name, self.A, self.b, self.c, claimed_order)

    def renamed(self, name):
        return ButcherTableau(name, self.A, self.b, self.c, self.claimed_order)

    def __eq__(self, other):
        if not isinstance(other, ButcherTableau):
            return NotImplemented
        return (
            self.name == other.name
            and self.claimed_order == other.claimed_order
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.c, other.c)
        )

    def __hash__(self):
        return hash((self.name, self.claimed_order, self.A.tobytes(), self.b.tobytes(), self.c.tobytes()))


@dataclass(frozen=True)
class ConditionResidual:
    """Left side minus right side of one condition.

    ``condition_id`` is the order-condition number 1..8 or ``"ROW(i)"``
    for the row simplifying assumption of stage ``i`` (1-based).
    """

    condition_id: int | str
    value: float

    @property
    def is_row(self):
        return isinstance(self.condition_id, str)


def _cond1(A, b, c):
    return b.sum()


def _cond2(A, b, c):
    return b @ c


def _cond3(A, b, c):
    return b @ c**2


def _cond4(A, b, c):
    return b @ (A @ c)


def _cond5(A, b, c):
    return b @ c**3


def _cond6(A, b, c):
    return b @ (A @ c**2)


def _cond7(A, b, c):
    return (b * c) @ (A @ c)


def _cond8(A, b, c):
    return b @ c**4


@dataclass(frozen=True)
class _Condition:
    number: int
    order: int
    rhs: Fraction
    evaluate: object = field(repr=False)


# Order conditions up to order six (valid under the row assumption).
ORDER_CONDITIONS = (
    _Condition(1, 2, Fraction(1, 2), _cond1),
    _Condition(2, 3, Fraction(1, 6), _cond2),
    _Condition(3, 4, Fraction(1, 12), _cond3),
    _Condition(4, 5, Fraction(1, 120), _cond4),
    _Condition(5, 5, Fraction(1, 20), _cond5),
    _Condition(6, 6, Fraction(1, 360), _cond6),
    _Condition(7, 6, Fraction(1, 180), _cond7),
    _Condition(8, 6, Fraction(1, 30), _cond8),
)


def row_assumption_residuals(t):
    """Residuals ``sum_j a_ij - c_i**2 / 2`` for each stage."""
    sums = t.A.sum(axis=1)
    return [
        ConditionResidual(f"ROW({i + 1})", float(sums[i] - 0.5 * t.c[i] ** 2))
        for i in range(t.s)
    ]


def order_condition_residuals(t, up_to_order):
    """Residuals of every order condition needed for order ``up_to_order``.

    Order 2 needs condition 1, order 3 conditions 1-2, order 4 conditions
    1-3, order 5 conditions 1-5 and order 6 conditions 1-8.
    """
    if isinstance(up_to_order, bool) or int(up_to_order) != up_to_order or not 2 <= up_to_order <= 6:
        raise DomainError(f"up_to_order must be an integer in 2..6, got {up_to_order!r}")
    return [
        ConditionResidual(cond.number, float(cond.evaluate(t.A, t.b, t.c) - float(cond.rhs)))
        for cond in ORDER_CONDITIONS
        if cond.order <= up_to_order
    ]


def classify_order(t, tol=DEFAULT_TOL):
    """Largest order p in 1..6 whose conditions (and the row assumption) hold.

    A tableau of the form above is always at least first order, so 1 is
    returned when condition 1 already fails.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if any(abs(r.value) > tol for r in row_assumption_residuals(t)):
        return 1
    order = 1
    for p in range(2, 7):
        if all(abs(r.value) <= tol for r in order_condition_residuals(t, p)):
            order = p
        else:
            break
    return order


# -- built-in schemes --------------------------------------------------------

def _otddirk4s2a():
    r33 = math.sqrt(33.0)
    A = [[(19.0 - 3.0 * r33) / 192.0, 0.0],
         [23.0 * (1.0 + r33) / 960.0, (9.0 - r33) / 120.0]]
    b = [(33.0 + r33) / 132.0, (33.0 - r33) / 132.0]
    c = [(9.0 - r33) / 24.0, (9.0 + r33) / 24.0]
    return ButcherTableau("OTDDIRK4s2a", A, b, c, 4)


def otddirk4s2b_alpha():
    """Real root of ``2 - 20a + 35a**2 - 35a**3`` from its radical closed form."""
    w = 34300.0 + 525.0 * math.sqrt(6699.0)
    return 1.0 / 3.0 - (w ** (2.0 / 3.0) - 875.0) / (105.0 * w ** (1.0 / 3.0))


def _otddirk4s2b():
    a = otddirk4s2b_alpha()
    beta = (3.0 - 4.0 * a - 10.0 * a * a) / (40.0 * (1.0 - 3.0 * a) ** 2)
    A = [[a * a / 2.0, 0.0],
         [beta, (1.0 - 2.0 * a) ** 2 / (8.0 * (1.0 - 3.0 * a) ** 2) - beta]]
    b = [1.0 / (6.0 - 24.0 * a + 36.0 * a * a),
         (1.0 - 3.0 * a) ** 2 / (3.0 * (1.0 - 4.0 * a + 6.0 * a * a))]
    c = [a, (1.0 - 2.0 * a) / (2.0 * (1.0 - 3.0 * a))]
    return ButcherTableau("OTDDIRK4s2b", A, b, c, 4)


def _tddirk5s2():
    r6 = math.sqrt(6.0)
    A = [[(11.0 - 4.0 * r6) / 100.0, 0.0],
         [(2.0 + 3.0 * r6) / 50.0, (7.0 - 2.0 * r6) / 100.0]]
    b = [(9.0 + r6) / 36.0, (9.0 - r6) / 36.0]
    c = [(4.0 - r6) / 10.0, (4.0 + r6) / 10.0]
    return ButcherTableau("TDDIRK5s2", A, b, c, 5)


def _otddirk5s3():
    r5 = math.sqrt(5.0)
    A = [[0.0, 0.0, 0.0],
         [0.1 - 6.0 * r5 / 175.0, 0.05 - 11.0 * r5 / 700.0, 0.0],
         [(20.0 + 19.0 * r5) / 1050.0, 17.0 * (5.0 + 3.0 * r5) / 1050.0, (3.0 - r5) / 60.0]]
    b = [1.0 / 12.0, (5.0 + r5) / 24.0, 5.0 / (6.0 * (5.0 + r5))]
    c = [0.0, (5.0 - r5) / 10.0, (5.0 + r5) / 10.0]
    return ButcherTableau("OTDDIRK5s3", A, b, c, 5)


BUILTIN_SCHEMES = {
    "OTDDIRK4s2a": _otddirk4s2a(),
    "OTDDIRK4s2b": _otddirk4s2b(),
    "TDDIRK5s2": _tddirk5s2(),
    "OTDDIRK5s3": _otddirk5s3(),
}


# -- JSON interchange --------------------------------------------------------

def tableau_to_dict(t):
    return {
        "name": t.name,
        "order": t.claimed_order,
        "c": [float(x) for x in t.c],
        "b": [float(x) for x in t.b],
        "A": [[float(x) for x in row] for row in t.A],
    }


def tableau_from_dict(data):
    missing = {"name", "order", "c", "b", "A"} - set(data)
    if missing:
        raise DomainError(f"tableau JSON is missing fields: {', '.join(sorted(missing))}")
    return ButcherTableau(
        name=str(data["name"]),
        A=data["A"],
        b=data["b"],
        c=data["c"],
        claimed_order=int(data["order"]),
    )


def load_tableau_json(path):
    path = Path(path)
    with path.open() as fh:
        data = json.load(fh)
    try:
        return tableau_from_dict(data)
    except DomainError as exc:
        raise DomainError(f"{path}: {exc}") from exc


# -- registry ----------------------------------------------------------------

class SchemeRegistry:
    """Name -> tableau lookup; the built-in schemes cannot be replaced."""

    def __init__(self, include_builtins=True):
        self._schemes = dict(BUILTIN_SCHEMES) if include_builtins else {}

    def __contains__(self, name):
        return name in self._schemes

    def __iter__(self):
        return iter(self._schemes)

    def __len__(self):
        return len(self._schemes)

    def names(self):
        return list(self._schemes)

    def get(self, name):
        try:
            return self._schemes[name]
        except KeyError:
            raise UnknownSchemeError(name, self._schemes) from None

    def register(self, t):
        if t.name in BUILTIN_SCHEMES and self._schemes.get(t.name) is not t:
            raise DomainError(f"cannot replace built-in scheme {t.name!r}")
        self._schemes[t.name] = t
        return t

    def load(self, path):
        return self.register(load_tableau_json(path))

    def load_dir(self, directory):
        return [self.load(p) for p in sorted(Path(directory).glob("*.json"))]

    def copy(self):
        new = SchemeRegistry(include_builtins=False)
        new._schemes = dict(self._schemes)
        return new


default_registry = SchemeRegistry()


def get_scheme(name, registry=None):
    return (default_registry if registry is None else registry).get(name)


def register_scheme(t, registry=None):
    return (default_registry if registry is None else registry).register(t)
