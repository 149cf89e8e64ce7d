"""Parameterized TDDIRK families and the solves that pick optimized members.

Two families are covered:

* ``TDDIRK4s2(alpha, beta)``: two stages, fourth order for every admissible
  ``(alpha, beta)``; ``alpha`` is the first node and ``beta`` is ``a21``.
* a three-stage, fifth-order family with an explicit first stage whose only
  free parameter (after the phase conditions) is the node ``c2``.

The named schemes OTDDIRK4s2a/b, TDDIRK5s2 and OTDDIRK5s3 are particular
members; the solves here reproduce them from the family formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ParameterDomainError
from .tableau import ButcherTableau

__all__ = [
    "FamilyParams2s4",
    "FamilyParams3s5",
    "PhaseLeadingTerms",
    "PhaseTerms4s2",
    "tddirk4s2",
    "phase_terms_4s2",
    "beta_for_zero_dispersion",
    "solve_property_I",
    "solve_property_II",
    "tddirk5s2",
    "tddirk5s3_family",
    "printed_e_polynomial",
    "printed_f_polynomial",
    "lte_norm_5s3",
    "lte_norm_5s3_derivative",
    "solve_optimal_c2",
]

_VANISH_TOL = 1e-13
_ROOT_AGREEMENT = 1e-12


# -- two-stage, fourth-order family ------------------------------------------

@dataclass(frozen=True)
class FamilyParams2s4:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ParameterDomainError("alpha and beta must be finite")
        if abs(1.0 - 3.0 * self.alpha) < 1e-14:
            raise ParameterDomainError("alpha must differ from 1/3 (c2 has denominator 1 - 3*alpha)")
        if self.c2 == self.alpha:
            raise ParameterDomainError("nodes c1 and c2 coincide")

    @property
    def c2(self):
        a = self.alpha
        return (1.0 - 2.0 * a) / (2.0 * (1.0 - 3.0 * a))


def tddirk4s2(p, name=None):
    """Member ``(alpha, beta)`` of the two-stage fourth-order family."""
    a, beta = p.alpha, p.beta
    one3 = 1.0 - 3.0 * a
    A = [[a * a / 2.0, 0.0],
         [beta, (1.0 - 2.0 * a) ** 2 / (8.0 * one3 ** 2) - beta]]
    b = [1.0 / (6.0 - 24.0 * a + 36.0 * a * a),
         one3 ** 2 / (3.0 * (1.0 - 4.0 * a + 6.0 * a * a))]
    c = [a, p.c2]
    if name is None:
        name = f"TDDIRK4s2({a!r},{beta!r})"
    return ButcherTableau(name, A, b, c, 4)


@dataclass(frozen=True)
class PhaseLeadingTerms:
    """Leading dispersion/dissipation terms ``Psi ~ C nu**(p+1)``, ``Phi ~ C nu**(q+1)``.

    A constant is ``nan`` when the reported order is beyond what the
    closed forms cover (use ``analysis.estimate_phase_expansion`` then).
    """

    dispersion_constant: float
    dispersion_order: int
    dissipation_constant: float
    dissipation_order: int


@dataclass(frozen=True)
class PhaseTerms4s2:
    leading: PhaseLeadingTerms
    upsilon_psi: float
    upsilon_phi: float
    D: float
    nu7_coefficient: float


def _D_polynomial(a, beta):
    return (
        (90720 * beta + 2520) * a**6
        - (181440 * beta + 3360) * a**5
        - 2240 * beta**2 - 1120 * beta + 103
        - (181440 * beta**2 - 35280 * beta + 1820) * a**4
        + (241920 * beta**2 + 84000 * beta + 824) * a**3
        - (120960 * beta**2 + 56560 * beta - 1346) * a**2
        + (26880 * beta**2 + 13440 * beta - 752) * a
    )


def phase_terms_4s2(p):
    """Closed-form phase-error terms of ``TDDIRK4s2(alpha, beta)``.

    ``upsilon_psi`` multiplies ``nu**5`` in the dispersion and
    ``upsilon_phi`` multiplies ``nu**6`` in the dissipation. ``D`` enters
    the ``nu**7`` dispersion coefficient ``D / (13440 (3 alpha - 1)**3)``;
    that expression is the true ``nu**7`` coefficient only once
    ``upsilon_psi`` vanishes, which is the only case where it leads.
    """
    a, beta = p.alpha, p.beta
    one3 = 1.0 - 3.0 * a
    ups_psi = (3.0 - 40.0 * beta * one3**2 - 4.0 * a - 10.0 * a * a) / (240.0 * (3.0 * a - 1.0))
    ups_phi = (
        36.0 * a**4 - 72.0 * a**3 - 6.0 * a**2 + 24.0 * a - 5.0
        + 72.0 * beta * one3**2 * (2.0 * a * a - 4.0 * a + 1.0)
    ) / (576.0 * one3**2)
    D = _D_polynomial(a, beta)
    nu7 = D / (13440.0 * (3.0 * a - 1.0) ** 3)

    if abs(ups_psi) >= _VANISH_TOL:
        disp = (ups_psi, 4)
    elif abs(nu7) >= _VANISH_TOL:
        disp = (nu7, 6)
    else:
        disp = (math.nan, 8)
    if abs(ups_phi) >= _VANISH_TOL:
        diss = (ups_phi, 5)
    else:
        diss = (math.nan, 7)
    leading = PhaseLeadingTerms(disp[0], disp[1], diss[0], diss[1])
    return PhaseTerms4s2(leading, ups_psi, ups_phi, D, nu7)


def beta_for_zero_dispersion(alpha):
    """The ``beta`` that cancels the ``nu**5`` dispersion term for a given ``alpha``."""
    return (3.0 - 4.0 * alpha - 10.0 * alpha * alpha) / (40.0 * (1.0 - 3.0 * alpha) ** 2)


def _safeguarded_newton(fun, dfun, lo, hi, tol=1e-15, maxiter=100):
    """Root of ``fun`` in the sign-changing bracket ``[lo, hi]``.

    Newton steps that leave the bracket fall back to bisection.
    """
    flo, fhi = fun(lo), fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise DomainError(f"[{lo}, {hi}] does not bracket a root")
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = fun(x)
        if fx == 0.0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi = x
        d = dfun(x)
        x_new = x - fx / d if d != 0.0 else lo - 1.0
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


def _agree(numeric, closed, what):
    if abs(numeric - closed) > _ROOT_AGREEMENT * max(1.0, abs(closed)):
        raise ArithmeticError(
            f"{what}: polynomial root {numeric!r} disagrees with closed form {closed!r}"
        )
    return closed


def solve_property_I():
    """Both parameter pairs with dispersion order 6 and dissipation order 7.

    ``alpha`` solves ``12 alpha**2 - 9 alpha + 1 = 0`` and ``beta`` cancels
    the ``nu**5`` dispersion term. The ``(9 - sqrt 33) / 24`` root comes first.
    """
    poly = lambda a: 12.0 * a * a - 9.0 * a + 1.0  # noqa: E731
    dpoly = lambda a: 24.0 * a - 9.0  # noqa: E731
    r33 = math.sqrt(33.0)
    pairs = []
    for closed, bracket in (((9.0 - r33) / 24.0, (0.0, 0.375)), ((9.0 + r33) / 24.0, (0.375, 1.0))):
        root = _safeguarded_newton(poly, dpoly, *bracket)
        alpha = _agree(root, closed, "property I")
        pairs.append(FamilyParams2s4(alpha, beta_for_zero_dispersion(alpha)))
    return pairs


def solve_property_II():
    """Parameters with dispersion order 8 (and dissipation order 5).

    ``alpha`` is the single real root of ``2 - 20a + 35a**2 - 35a**3``.
    """
    poly = lambda a: 2.0 - 20.0 * a + 35.0 * a * a - 35.0 * a**3  # noqa: E731
    dpoly = lambda a: -20.0 + 70.0 * a - 105.0 * a * a  # noqa: E731
    root = _safeguarded_newton(poly, dpoly, 0.0, 0.2)
    w = 34300.0 + 525.0 * math.sqrt(6699.0)
    closed = 1.0 / 3.0 - (w ** (2.0 / 3.0) - 875.0) / (105.0 * w ** (1.0 / 3.0))
    alpha = _agree(root, closed, "property II")
    return FamilyParams2s4(alpha, beta_for_zero_dispersion(alpha))


def tddirk5s2():
    """The unique fifth-order member of the two-stage family."""
    r6 = math.sqrt(6.0)
    p = FamilyParams2s4((4.0 - r6) / 10.0, (2.0 + 3.0 * r6) / 50.0)
    return tddirk4s2(p, name="TDDIRK5s2").with_order(5)


# -- three-stage, fifth-order family ------------------------------------------

@dataclass(frozen=True)
class FamilyParams3s5:
    c2: float

    def __post_init__(self):
        c2 = self.c2
        if not math.isfinite(c2):
            raise ParameterDomainError("c2 must be finite")
        if c2 == 0.0:
            raise ParameterDomainError("c2 must be nonzero")
        if abs(1.0 - 2.0 * c2) < 1e-14:
            raise ParameterDomainError("c2 must differ from 1/2")
        if 3.0 - 10.0 * c2 + 10.0 * c2 * c2 == 0.0:
            raise ParameterDomainError("3 - 10 c2 + 10 c2**2 must be nonzero")
        c3 = self.c3
        if c3 == 0.0:
            raise ParameterDomainError("c2 = 3/5 gives c3 = 0, which makes the weights singular")
        if c3 == c2:
            raise ParameterDomainError("nodes c2 and c3 coincide")

    @property
    def c3(self):
        return (3.0 - 5.0 * self.c2) / (5.0 * (1.0 - 2.0 * self.c2))

    @property
    def a21(self):
        c2 = self.c2
        return (2.0 - 11.0 * c2 + 35.0 * c2 * c2) / 70.0

    @property
    def a31(self):
        c2 = self.c2
        return (1575.0 * c2**3 - 2275.0 * c2**2 + 940.0 * c2 - 102.0) / (
            5250.0 * c2 * (1.0 - 2.0 * c2) ** 2
        )


def tddirk5s3_family(p, name=None):
    """Three-stage fifth-order member with dispersion order 8 / dissipation order 7."""
    c2, c3 = p.c2, p.c3
    b1 = (1.0 - 2.0 * (c2 + c3 - 3.0 * c2 * c3)) / (12.0 * c2 * c3)
    b2 = (1.0 - 2.0 * c3) / (12.0 * c2 * (c2 - c3))
    b3 = (2.0 * c2 - 1.0) / (12.0 * c3 * (c2 - c3))
    a21 = p.a21
    a22 = c2 * c2 / 2.0 - a21
    a31 = p.a31
    a32 = (2.0 - 240.0 * b2 * a22 * c2 - 120.0 * b3 * c3**3 + 240.0 * b3 * a31 * c3) / (
        240.0 * b3 * (c2 - c3)
    )
    a33 = c3 * c3 / 2.0 - a31 - a32
    A = [[0.0, 0.0, 0.0], [a21, a22, 0.0], [a31, a32, a33]]
    if name is None:
        name = f"TDDIRK5s3({c2!r})"
    return ButcherTableau(name, A, [b1, b2, b3], [0.0, c2, c3], 5)


def printed_e_polynomial(c2, a21, a31):
    """The ``nu**7`` dispersion numerator E exactly as it is printed.

    Transcription only: as printed it does not vanish on the family (not
    even at the optimal ``c2``), so phase orders must be checked with the
    series fit in :mod:`tddirk.analysis` instead.
    """
    return (
        25 * (280 * a31 - 61) * c2
        - 1000 * (371 * a31 - 33) * c2**4
        + (7995 - 59500 * a31) * c2**2
        + 50 * (4130 * a31 - 431) * c2**3
        + 14000 * (25 * a31 - 2) * c2**5
        + 3000 * a31 * c2**2
        - 220 * c2**2
        + 70 * a21 * (9 + (20 - 500 * a31) * c2 + (40 * a31 - 3) * (100 * c2**4 - 150 * c2**3 - 3500 * c2**6))
        + 1400 * a21**2 * (5 * c2 - 3)
        + 102
    )


def printed_f_polynomial(c2, a21, a31):
    """The ``nu**6`` dissipation numerator F exactly as printed (see E)."""
    return (
        12 + 90 * a21 - 145 * c2 - 150 * a21 * c2 + 750 * a31 * c2 + 525 * c2**2
        + 4500 * a31 * c2**2 - 800 * c2**3 + 9000 * a31 * c2**3 + 450 * c2**4
        - 6000 * a31 * c2**4
    )


def lte_norm_5s3(c2):
    """Principal local-error magnitude of the three-stage family as a function of c2."""
    if abs(2.0 * c2 - 1.0) < 1e-14:
        raise DomainError("lte_norm_5s3 is singular at c2 = 1/2")
    num = (
        122.0 - 2055.0 * c2 + 12930.0 * c2**2 - 40225.0 * c2**3
        + 66150.0 * c2**4 - 55125.0 * c2**5 + 18375.0 * c2**6
    )
    return num / (3969000000.0 * (2.0 * c2 - 1.0) ** 3)


def lte_norm_5s3_derivative(c2):
    if abs(2.0 * c2 - 1.0) < 1e-14:
        raise DomainError("lte_norm_5s3_derivative is singular at c2 = 1/2")
    q = 1.0 - 5.0 * c2 + 5.0 * c2 * c2
    return q * q * (3.0 - 10.0 * c2 + 10.0 * c2 * c2) / (9000000.0 * (1.0 - 2.0 * c2) ** 4)


def solve_optimal_c2():
    """Both real stationary points ``(5 -+ sqrt 5) / 10`` of the LTE norm, smaller first."""
    poly = lambda x: 5.0 * x * x - 5.0 * x + 1.0  # noqa: E731
    dpoly = lambda x: 10.0 * x - 5.0  # noqa: E731
    r5 = math.sqrt(5.0)
    roots = []
    for closed, bracket in (((5.0 - r5) / 10.0, (0.0, 0.5)), ((5.0 + r5) / 10.0, (0.5, 1.0))):
        roots.append(_agree(_safeguarded_newton(poly, dpoly, *bracket), closed, "optimal c2"))
    return roots[0], roots[1]
