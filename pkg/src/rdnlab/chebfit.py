"""Chebyshev interpolation on an interval and its lowering to 2-layer nets.

``p_m`` denotes the Chebyshev polynomial of degree ``m - 1`` mapped to the
interval, so an ``M``-term series has degree ``M - 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .netcore import FullTwoLayerSolution, build_full_two_layer

__all__ = [
    "ChebyshevSeries",
    "cheb_basis_two_layer",
    "cheb_deriv",
    "cheb_eval",
    "cheb_fit",
    "cheb_to_two_layer",
    "estimate_rho",
    "lobatto_points",
    "read_series_csv",
    "write_series_csv",
]

COEFF_FLOOR = 1e-13


@dataclass(frozen=True)
class ChebyshevSeries:
    coeffs: np.ndarray
    interval: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be a non-empty finite vector")
        a, b = map(float, self.interval)
        if not b > a:
            raise ValueError("degenerate interval")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "interval", (a, b))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return cheb_eval(self, x)


def lobatto_points(degree: int, interval=(0.0, 1.0)) -> np.ndarray:
    """``degree + 1`` Chebyshev-Lobatto points, increasing."""
    a, b = interval
    if degree == 0:
        return np.array([0.5 * (a + b)])
    s = -np.cos(np.pi * np.arange(degree + 1) / degree)
    return 0.5 * (a + b) + 0.5 * (b - a) * s


def cheb_fit(f, degree: int, interval=(0.0, 1.0)) -> ChebyshevSeries:
    """Interpolate ``f`` at the Lobatto points (discrete cosine transform)."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    x = lobatto_points(degree, interval)
    v = np.asarray(f(x), dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite samples in cheb_fit")
    if degree == 0:
        return ChebyshevSeries(v[:1], interval)
    n = degree
    # values at s_j = cos(pi j / n) are the reversed samples
    vr = v[::-1]
    j = np.arange(n + 1)
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    cosm = np.cos(np.pi * np.outer(j, j) / n)
    c = (2.0 / n) * (cosm @ (w * vr))
    c[0] *= 0.5
    c[-1] *= 0.5
    return ChebyshevSeries(c, interval)


def cheb_eval(s: ChebyshevSeries, x):
    """Clenshaw recurrence."""
    a, b = s.interval
    x = np.asarray(x, dtype=float)
    y = (2.0 * x - (a + b)) / (b - a)
    c = s.coeffs
    b1 = np.zeros_like(y)
    b2 = np.zeros_like(y)
    for ck in c[:0:-1]:
        b1, b2 = 2.0 * y * b1 - b2 + ck, b1
    out = y * b1 - b2 + c[0]
    return out if out.ndim else float(out)


def cheb_deriv(s: ChebyshevSeries) -> ChebyshevSeries:
    """Series of ``d/dx`` via ``c'_{k-1} = c'_{k+1} + 2 k c_k``."""
    c = s.coeffs
    n = c.size - 1
    if n == 0:
        return ChebyshevSeries([0.0], s.interval)
    d = np.zeros(n + 2)
    for k in range(n, 0, -1):
        d[k - 1] = d[k + 1] + 2.0 * k * c[k]
    d[0] *= 0.5
    a, b = s.interval
    return ChebyshevSeries(d[:n] * (2.0 / (b - a)), s.interval)


def estimate_rho(s: ChebyshevSeries) -> float:
    """``exp(-slope)`` of a least-squares line through ``(m, log|c_m|)``.

    Only coefficients above ``1e-13`` relative to the largest one enter the
    fit.  A series whose tail drops abruptly to the floor (a polynomial)
    reports ``inf``; a zero series reports ``nan``.
    """
    if s.degree < 8:
        raise ValueError("need degree >= 8 to estimate a decay rate")
    mag = np.abs(s.coeffs)
    top = mag.max()
    if top == 0.0:
        return float("nan")
    keep = np.nonzero(mag > COEFF_FLOOR * top)[0]
    last = keep[-1]
    if last < 3:
        return float("inf")
    m = keep
    slope = np.polyfit(m, np.log(mag[m]), 1)[0]
    # a genuine geometric tail continues to the floor; a finite series stops
    # well above it
    if last < s.degree and mag[last] > 1e-6 * top and np.all(mag[last + 1:] <= COEFF_FLOOR * top):
        return float("inf")
    if slope >= 0:
        return 1.0
    return float(math.exp(-slope))


def cheb_to_two_layer(s: ChebyshevSeries, n_delta: int) -> FullTwoLayerSolution:
    """Piecewise-linear interpolant of the series on the equidistant grid."""
    if n_delta < 2:
        raise ValueError("n_delta must be >= 2")
    x = np.linspace(*s.interval, n_delta)
    return build_full_two_layer(n_delta, cheb_eval(s, x), s.interval)


def cheb_basis_two_layer(n_terms: int, n_delta: int, interval=(0.0, 1.0)) -> list[FullTwoLayerSolution]:
    """Two-layer nets for ``p_1 .. p_M`` so that a series is a gamma-combination."""
    out = []
    for m in range(n_terms):
        e = np.zeros(m + 1)
        e[m] = 1.0
        out.append(cheb_to_two_layer(ChebyshevSeries(e, interval), n_delta))
    return out


def write_series_csv(s: ChebyshevSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# interval={s.interval[0]!r},{s.interval[1]!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "coeff"])
        for m, c in enumerate(s.coeffs, start=1):
            w.writerow([m, repr(float(c))])


def read_series_csv(path) -> ChebyshevSeries:
    with open(path, newline="") as fh:
        head = fh.readline()
        a, b = (float(v) for v in head.split("=", 1)[1].split(","))
        rows = list(csv.reader(fh))[1:]
    return ChebyshevSeries([float(r[1]) for r in rows], (a, b))
