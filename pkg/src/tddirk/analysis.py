"""Linear stability and phase-error analysis of TDDIRK tableaux.

Applied to ``y' = lambda y`` a TDDIRK method gives ``y_{n+1} = R(z) y_n``
with ``z = lambda h`` and::

    R(z) = 1 + z + z**2 b . (I - z**2 A)^{-1} (e + c z)

On the oscillatory test equation (``z = i nu``) the per-step phase error
is ``Psi(nu) = nu - arg R(i nu)`` and the amplitude error is
``Phi(nu) = 1 - |R(i nu)|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IndeterminateOrderError, PoleError

__all__ = [
    "DEFAULT_WINDOW",
    "StabilityGrid",
    "PhaseExpansion",
    "stability_function",
    "stability_values",
    "imag_axis_decomposition",
    "stability_region",
    "dispersion",
    "dissipation",
    "estimate_phase_expansion",
]

DEFAULT_WINDOW = (-6.0, 0.3, -6.0, 6.0)

_DROP_BELOW = 1e-13
_SLOPE_SLACK = 0.35
_MAX_FIT_RESIDUAL = 0.05


def stability_function(t, z):
    """``R(z)`` by forward substitution on the lower-triangular stage system."""
    z = complex(z)
    z2 = z * z
    A, b, c = t.A, t.b, t.c
    Y = []
    for i in range(t.s):
        denom = 1.0 - z2 * A[i, i]
        if denom == 0:
            raise PoleError(z, i)
        acc = 1.0 + c[i] * z
        for j in range(i):
            acc += z2 * A[i, j] * Y[j]
        Y.append(acc / denom)
    return 1.0 + z + z2 * sum(bi * yi for bi, yi in zip(b, Y))


def stability_values(t, Z):
    """Vectorized ``R`` over an array of complex points; poles give ``nan``."""
    Z = np.asarray(Z, dtype=complex)
    Z2 = Z * Z
    A, b, c = t.A, t.b, t.c
    Y = []
    R = 1.0 + Z
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(t.s):
            acc = 1.0 + c[i] * Z
            for j in range(i):
                if A[i, j] != 0.0:
                    acc = acc + (A[i, j] * Z2) * Y[j]
            denom = 1.0 - A[i, i] * Z2
            Yi = np.where(denom == 0, np.nan + 0j, acc / np.where(denom == 0, 1.0, denom))
            Y.append(Yi)
            R = R + b[i] * Z2 * Yi
    return R


def imag_axis_decomposition(t, nu):
    """``R(i nu)`` split into real and imaginary parts with dense solves.

    Real part ``1 - nu**2 b.(I + nu**2 A)^{-1} e``; imaginary part
    ``nu - nu**3 b.(I + nu**2 A)^{-1} c``.
    """
    M = np.eye(t.s) + nu * nu * t.A
    re = 1.0 - nu * nu * (t.b @ np.linalg.solve(M, np.ones(t.s)))
    im = nu - nu**3 * (t.b @ np.linalg.solve(M, t.c))
    return complex(re, im)


@dataclass
class StabilityGrid:
    """``|R(z)|`` sampled at cell centres of a rectangular window.

    ``values[i, j]`` belongs to the i-th real and j-th imaginary centre.
    Poles are stored as ``inf``.
    """

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int
    values: np.ndarray

    @property
    def re_centers(self):
        return _centers(self.re_min, self.re_max, self.nx)

    @property
    def im_centers(self):
        return _centers(self.im_min, self.im_max, self.ny)

    @property
    def stable(self):
        return self.values <= 1.0

    def value_at(self, z):
        """Value of the cell containing ``z``."""
        i = int((z.real - self.re_min) / (self.re_max - self.re_min) * self.nx)
        j = int((z.imag - self.im_min) / (self.im_max - self.im_min) * self.ny)
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise DomainError(f"z={z!r} lies outside the grid window")
        return float(self.values[i, j])

    def to_csv(self, path):
        from .io import atomic_write_text

        re, im = np.meshgrid(self.re_centers, self.im_centers, indexing="ij")
        lines = ["re,im,absR"]
        for x, y, v in zip(re.ravel(), im.ravel(), self.values.ravel()):
            lines.append(f"{float(x)!r},{float(y)!r},{'inf' if math.isinf(v) else repr(float(v))}")
        atomic_write_text(path, "\n".join(lines) + "\n")

    def to_ppm_bytes(self):
        # rows run from im_max down to im_min, columns from re_min to re_max
        img = np.full((self.ny, self.nx, 3), 255, dtype=np.uint8)
        vals = self.values.T[::-1, :]
        img[vals <= 1.0] = (96, 140, 200)
        img[np.isinf(vals)] = (0, 0, 0)
        re_axis = _axis_index(self.re_min, self.re_max, self.nx)
        im_axis = _axis_index(self.im_min, self.im_max, self.ny)
        if re_axis is not None:
            img[:, re_axis] = (64, 64, 64)
        if im_axis is not None:
            img[self.ny - 1 - im_axis, :] = (64, 64, 64)
        header = f"P6\n{self.nx} {self.ny}\n255\n".encode("ascii")
        return header + img.tobytes()

    def to_ppm(self, path):
        from .io import atomic_write_bytes

        atomic_write_bytes(path, self.to_ppm_bytes())

    def contour_segments(self, level=1.0):
        return _marching_squares(self.re_centers, self.im_centers, self.values, level)

    def to_svg_text(self, title=None, level=1.0):
        segs = self.contour_segments(level)
        w = self.re_max - self.re_min
        hgt = self.im_max - self.im_min
        scale = 600.0 / max(w, hgt)
        W, H = w * scale, hgt * scale

        def px(x, y):
            return (x - self.re_min) * scale, (self.im_max - y) * scale

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.1f}" height="{H:.1f}" '
            f'viewBox="0 0 {W:.1f} {H:.1f}">',
            f'<rect x="0" y="0" width="{W:.1f}" height="{H:.1f}" fill="white" stroke="black"/>',
        ]
        if title:
            parts.append(f'<title>{_escape(title)}</title>')
        if self.re_min <= 0.0 <= self.re_max:
            x0, _ = px(0.0, 0.0)
            parts.append(f'<line x1="{x0:.2f}" y1="0" x2="{x0:.2f}" y2="{H:.1f}" stroke="gray"/>')
        if self.im_min <= 0.0 <= self.im_max:
            _, y0 = px(0.0, 0.0)
            parts.append(f'<line x1="0" y1="{y0:.2f}" x2="{W:.1f}" y2="{y0:.2f}" stroke="gray"/>')
        d = []
        for (x1, y1), (x2, y2) in segs:
            a, b_ = px(x1, y1)
            c_, e = px(x2, y2)
            d.append(f"M{a:.2f} {b_:.2f}L{c_:.2f} {e:.2f}")
        parts.append(f'<path d="{"".join(d)}" fill="none" stroke="black" stroke-width="1.5"/>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def to_svg(self, path, title=None):
        from .io import atomic_write_text

        atomic_write_text(path, self.to_svg_text(title))


def _centers(lo, hi, n):
    return lo + (np.arange(n) + 0.5) * ((hi - lo) / n)


def _axis_index(lo, hi, n):
    if not lo <= 0.0 < hi:
        return None
    return min(int((0.0 - lo) / (hi - lo) * n), n - 1)


def _escape(text):
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# corners: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1)
# edges:   0=c0-c1 1=c1-c2 2=c3-c2 3=c0-c3
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))
_CASES = {
    1: ((3, 0),), 2: ((0, 1),), 3: ((3, 1),), 4: ((1, 2),), 5: ((3, 0), (1, 2)),
    6: ((0, 2),), 7: ((3, 2),), 8: ((2, 3),), 9: ((0, 2),), 10: ((0, 1), (2, 3)),
    11: ((1, 2),), 12: ((1, 3),), 13: ((0, 1),), 14: ((0, 3),),
}


def _marching_squares(xs, ys, values, level):
    """Line segments of the ``values == level`` contour on a node grid."""
    v = np.where(np.isfinite(values), values, 1e12)
    v = np.minimum(v, 1e12)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    corners_v = [v[:-1, :-1], v[1:, :-1], v[1:, 1:], v[:-1, 1:]]
    corners_x = [X[:-1, :-1], X[1:, :-1], X[1:, 1:], X[:-1, 1:]]
    corners_y = [Y[:-1, :-1], Y[1:, :-1], Y[1:, 1:], Y[:-1, 1:]]
    case = np.zeros(corners_v[0].shape, dtype=np.int8)
    for k, cv in enumerate(corners_v):
        case |= (cv <= level).astype(np.int8) << k

    def edge_point(e, mask):
        a, b = _EDGE_CORNERS[e]
        va, vb = corners_v[a][mask], corners_v[b][mask]
        s = (level - va) / (vb - va)
        px = corners_x[a][mask] + s * (corners_x[b][mask] - corners_x[a][mask])
        py = corners_y[a][mask] + s * (corners_y[b][mask] - corners_y[a][mask])
        return px, py

    segments = []
    for code, pairs in _CASES.items():
        mask = case == code
        if not mask.any():
            continue
        for e1, e2 in pairs:
            x1, y1 = edge_point(e1, mask)
            x2, y2 = edge_point(e2, mask)
            segments.extend(zip(zip(x1, y1), zip(x2, y2)))
    return segments


def stability_region(t, window=DEFAULT_WINDOW, nx=600, ny=1200):
    """Rasterize ``|R(z)|`` over ``window = (re_min, re_max, im_min, im_max)``."""
    re_min, re_max, im_min, im_max = map(float, window)
    if not (re_min < re_max and im_min < im_max):
        raise DomainError(f"window bounds must be ordered, got {window!r}")
    if nx < 2 or ny < 2:
        raise DomainError("nx and ny must be at least 2")
    re = _centers(re_min, re_max, nx)
    im = _centers(im_min, im_max, ny)
    if im_min == -im_max:
        # exact mirror pairs, so |R(conj z)| == |R(z)| holds bitwise
        im = 0.5 * (im - im[::-1])
    Z = re[:, None] + 1j * im[None, :]
    R = stability_values(t, Z)
    values = np.abs(R)
    values[~np.isfinite(values)] = np.inf
    return StabilityGrid(re_min, re_max, im_min, im_max, int(nx), int(ny), values)


def dispersion(t, nu):
    """Phase error ``nu - arg R(i nu)`` (principal branch, valid for moderate nu)."""
    if not nu > 0:
        raise DomainError("nu must be positive")
    R = stability_function(t, 1j * nu)
    if R == 0:
        raise DomainError(f"R(i nu) vanishes at nu={nu!r}")
    return nu - math.atan2(R.imag, R.real)


def dissipation(t, nu):
    """Amplitude error ``1 - |R(i nu)|``."""
    if not nu > 0:
        raise DomainError("nu must be positive")
    return 1.0 - abs(stability_function(t, 1j * nu))


@dataclass(frozen=True)
class PhaseExpansion:
    """Fitted leading terms ``Psi ~ C nu**(p+1)`` and ``Phi ~ C nu**(q+1)``."""

    dispersion_order: int
    dispersion_constant: float
    dissipation_order: int
    dissipation_constant: float
    fit_residual: float


def _fit_leading_term(nus, vals, what, parity):
    keep = np.abs(vals) >= _DROP_BELOW
    if keep.sum() < 3:
        raise IndeterminateOrderError(
            f"{what}: fewer than 3 samples above {_DROP_BELOW:g}; the scheme is "
            "(numerically) free of this error on the sampled range"
        )
    x, v = nus[keep], vals[keep]
    slope = np.polyfit(np.log(x), np.log(np.abs(v)), 1)[0]
    k = int(round(slope))
    # Psi is odd in nu and Phi even, so only one parity of exponent can lead
    if abs(slope - k) > _SLOPE_SLACK or k % 2 != parity:
        raise IndeterminateOrderError(
            f"{what}: log-log slope {slope:.3f} does not identify a leading power; "
            "narrow the nu range"
        )
    k = max(5, k)
    # leading monomial plus the next two of the same parity, relative weights
    powers = np.column_stack([x**k, x ** (k + 2), x ** (k + 4)])
    coef, *_ = np.linalg.lstsq(powers / np.abs(v)[:, None], np.sign(v), rcond=None)
    fitted = powers @ coef
    resid = float(np.max(np.abs(fitted - v) / np.abs(v)))
    if resid > _MAX_FIT_RESIDUAL:
        raise IndeterminateOrderError(
            f"{what}: power-series fit misses the samples by {resid:.1%}; "
            "two regimes overlap on the sampled range"
        )
    return k - 1, float(coef[0]), resid


def estimate_phase_expansion(t, nu_min=0.05, nu_max=0.8, samples=17):
    """Estimate dispersion/dissipation orders and constants by series fitting.

    ``Psi`` and ``Phi`` are sampled on a geometric grid; the log-log slope
    fixes the exponent and a least-squares fit of the leading power plus the
    next two of the same parity gives the constant.
    """
    if not 0 < nu_min < nu_max:
        raise DomainError("need 0 < nu_min < nu_max")
    nus = np.geomspace(nu_min, nu_max, samples)
    psi = np.array([dispersion(t, nu) for nu in nus])
    phi = np.array([dissipation(t, nu) for nu in nus])
    p, cp, rp = _fit_leading_term(nus, psi, "dispersion", parity=1)
    q, cq, rq = _fit_leading_term(nus, phi, "dissipation", parity=0)
    return PhaseExpansion(p, cp, q, cq, max(rp, rq))
