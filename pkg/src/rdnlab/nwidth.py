"""N-width surrogates: projection-error upper bounds and 2N-ball lower bounds.

Lower-bound certificates follow the classical construction for sharply
convective classes: finite-difference combinations (in time) of manifold
members give ``2N`` functions concentrated on disjoint regions around the
moving singularity; Gram-Schmidt makes them orthogonal, and if their norms
decay no faster than ``N^{-alpha}`` with bounded coefficient sums the width
cannot decay faster either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Ball2N",
    "BallError",
    "CertificateReport",
    "DecayFit",
    "DependenceError",
    "OrthogonalBall",
    "StencilCoefficients",
    "a_np",
    "build_ball",
    "fit_decay",
    "gram_schmidt",
    "lower_bound_certificate",
    "vandermonde_stencil",
    "write_certificate_csv",
]

MAX_STENCIL = 12


class BallError(ValueError):
    """Schedule produced overlapping regions or a non-dominant Gram matrix."""


class DependenceError(ValueError):
    """Gram-Schmidt met a (numerically) dependent function."""


@dataclass(frozen=True)
class StencilCoefficients:
    K: int
    s1: int
    b: np.ndarray
    residual: float

    def apply(self, samples: np.ndarray) -> np.ndarray:
        """``sum_k b_k samples[k]`` along the first axis."""
        return np.tensordot(self.b, samples, axes=(0, 0))


def _stencil_matrix(K: int) -> np.ndarray:
    i = np.arange(K)[:, None]
    k = np.arange(K)[None, :]
    fact = np.array([math.factorial(j) for j in range(K)], dtype=float)[:, None]
    return k.astype(float) ** i / fact


def vandermonde_stencil(K: int, s1: int) -> StencilCoefficients:
    """Solve ``sum_k b_k (k-1)^(i-1)/(i-1)! = [i-1 == s1]``, ``i, k = 1..K``."""
    if K > MAX_STENCIL:
        raise ValueError(f"K={K} exceeds the conditioning cap {MAX_STENCIL}")
    if not 0 <= s1 < K:
        raise ValueError(f"need 0 <= s1 < K, got s1={s1}, K={K}")
    A = _stencil_matrix(K)
    rhs = np.zeros(K)
    rhs[s1] = 1.0
    b = np.linalg.solve(A, rhs)
    res = float(np.max(np.abs(A @ b - rhs)))
    if res > 1e-8:
        raise ArithmeticError(f"stencil residual {res:.3e} above 1e-8")
    return StencilCoefficients(K, s1, b, res)


def a_np(coefficients, p: float = 1.0) -> float:
    """``sup_n sum_k |a_nk|`` (p = 1) or ``sup_n (sum_k k^p |a_nk|^p)^(1/p)``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if p == 1:
        return float(np.max(np.sum(np.abs(a), axis=1)))
    k = np.arange(1, a.shape[1] + 1, dtype=float)
    return float(np.max(np.sum(k ** p * np.abs(a) ** p, axis=1) ** (1.0 / p)))


@dataclass(frozen=True)
class Ball2N:
    n: int
    functions: np.ndarray
    coefficients: np.ndarray
    taus: np.ndarray
    regions: np.ndarray
    grid: np.ndarray
    dt: float
    stencil: StencilCoefficients
    dx: float
    gram: np.ndarray = field(repr=False)

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(self.dx * np.einsum("ij,ij->i", self.functions, self.functions))


def build_ball(u: Callable, taus: Sequence[float], dt: float, stencil: StencilCoefficients,
               singularity_path: Callable, region_radius: float, grid,
               dx: float | None = None) -> Ball2N:
    """``phi_n(x) = sum_k b_k u(x, tau_n + (k-1) dt)`` on ``grid``.

    ``u(x, t)`` takes the grid array and a scalar time.  Norms use the weight
    ``dx`` (default ``1/(len(grid) - 1)``, the unit-interval rescaling).
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size % 2 or taus.size == 0:
        raise ValueError("need 2N base times")
    if dt > 0.5:
        raise ValueError(f"dt={dt} above 1/2")
    x = np.asarray(grid, dtype=float)
    dx = 1.0 / (x.size - 1) if dx is None else float(dx)
    centers = np.array([float(singularity_path(t)) for t in taus])
    regions = np.stack([centers - region_radius, centers + region_radius], axis=1)
    order = np.argsort(centers)
    r = regions[order]
    overlap = np.nonzero(r[1:, 0] < r[:-1, 1] - 1e-12)[0]
    if overlap.size:
        i = overlap[0]
        raise BallError(
            f"regions {tuple(r[i])} and {tuple(r[i + 1])} overlap; shrink the radius or "
            f"spread the times (dt={dt})")
    K = stencil.K
    tnk = taus[:, None] + dt * np.arange(K)[None, :]
    phis = np.stack([stencil.apply(np.stack([np.asarray(u(x, t), dtype=float) for t in row]))
                     for row in tnk])
    coeffs = np.tile(stencil.b, (taus.size, 1))
    norms = np.sqrt(dx * np.einsum("ij,ij->i", phis, phis))
    if np.any(norms == 0.0):
        raise BallError(f"zero function in the ball at n={int(np.argmin(norms)) + 1}")
    hat = phis / norms[:, None]
    gram = dx * hat @ hat.T
    off = np.sum(np.abs(gram), axis=1) - np.abs(np.diag(gram))
    worst = int(np.argmax(off - np.abs(np.diag(gram))))
    if not np.all(np.abs(np.diag(gram)) - off > 1e-10):
        raise BallError(
            f"Gram matrix not strictly diagonally dominant (row {worst + 1}: off-diagonal "
            f"mass {off[worst]:.3g}); reduce dt={dt}")
    return Ball2N(taus.size // 2, phis, coeffs, tnk, regions, x, float(dt), stencil, dx, gram)


@dataclass(frozen=True)
class OrthogonalBall:
    ball: Ball2N
    psi: np.ndarray
    theta: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(self.ball.dx * np.einsum("ij,ij->i", self.psi, self.psi))


def gram_schmidt(ball: Ball2N) -> OrthogonalBall:
    """``psi_n = phi_n - sum_{m<n} (phi_n, psihat_m) psihat_m`` with ``psi = theta phi``.

    Each projection is applied twice (re-orthogonalisation) for stability;
    ``theta`` is unit lower triangular.
    """
    phi = ball.functions
    dx = ball.dx
    n = phi.shape[0]
    psi = np.zeros_like(phi)
    hat = np.zeros_like(phi)
    theta = np.zeros((n, n))
    hat_theta = np.zeros((n, n))
    phi_norm = ball.norms
    for i in range(n):
        v = phi[i].copy()
        th = np.zeros(n)
        th[i] = 1.0
        for _ in range(2):
            if i:
                c = dx * hat[:i] @ v
                v -= c @ hat[:i]
                th -= c @ hat_theta[:i]
        nv = math.sqrt(dx * float(v @ v))
        if nv < 1e-12 * phi_norm[i]:
            raise DependenceError(f"function {i + 1} depends on the previous ones")
        psi[i] = v
        theta[i] = th
        hat[i] = v / nv
        hat_theta[i] = th / nv
    return OrthogonalBall(ball, psi, theta)


@dataclass(frozen=True)
class DecayFit:
    model: str
    rate: float
    intercept: float
    r_squared: float
    fit_range: tuple

    @property
    def base(self) -> float:
        """``e_n ~ C base^{-n}`` for the exponential model."""
        return math.exp(-self.rate)


def fit_decay(ns, errors, model: str = "algebraic", fit_range=None) -> DecayFit:
    """Least-squares line of ``log e`` against ``log n`` or ``n``.

    ``fit_range`` is an index window ``(start, stop)`` into the inputs.
    """
    ns = np.asarray(ns, dtype=float)
    es = np.asarray(errors, dtype=float)
    lo, hi = (0, ns.size) if fit_range is None else fit_range
    ns, es = ns[lo:hi], es[lo:hi]
    if ns.size < 4:
        raise ValueError("need at least 4 points to fit a decay rate")
    if np.any(es <= 0) or not np.all(np.isfinite(es)):
        raise ValueError("errors must be positive and finite")
    if model == "algebraic":
        xs = np.log(ns)
    elif model == "exponential":
        xs = ns
    else:
        raise ValueError(f"unknown model {model!r}")
    ys = np.log(es)
    slope, icpt = np.polyfit(xs, ys, 1)
    res = ys - (slope * xs + icpt)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(res ** 2)) / ss_tot)
    return DecayFit(model, float(slope), float(icpt), r2, (int(lo), int(hi)))


@dataclass(frozen=True)
class CertificateRow:
    N: int
    min_psi_norm: float
    scaled_norm: float
    A_N1: float
    dominant: bool


@dataclass(frozen=True)
class CertificateReport:
    """Empirical lower-bound certificate across several ``N``.

    Passes when every ball is dominant, every ``A_N1`` stays below
    ``a_bound`` and ``min ||psi_n|| N^alpha`` never drops below its value at
    the smallest ``N`` divided by ``factor``.
    """

    alpha_claim: float
    rows: tuple
    factor: float
    a_bound: float

    @property
    def scaled_ratio(self) -> float:
        s = [r.scaled_norm for r in self.rows]
        return s[0] / min(s)

    @property
    def passed(self) -> bool:
        return (all(r.dominant for r in self.rows)
                and all(r.A_N1 <= self.a_bound + 1e-12 for r in self.rows)
                and self.scaled_ratio <= self.factor)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        lines = [
            "lower-bound surrogate (2N-ball construction), not the exact N-width",
            f"alpha_claim={self.alpha_claim!r}",
            f"scaled_norm ratio first/min={self.scaled_ratio:.4f} (limit {self.factor})",
            f"A_N1 limit={self.a_bound!r}",
            f"verdict={verdict}",
        ]
        return "\n".join(lines)


def lower_bound_certificate(balls, alpha_claim: float, factor: float = 2.0,
                            a_bound: float | None = None) -> CertificateReport:
    """Certificate from orthogonalised balls (one per ``N``)."""
    if isinstance(balls, OrthogonalBall):
        balls = [balls]
    balls = sorted(balls, key=lambda b: b.ball.n)
    rows = []
    for ob in balls:
        N = ob.ball.n
        mn = float(np.min(ob.norms))
        rows.append(CertificateRow(N, mn, mn * N ** alpha_claim,
                                   a_np(ob.ball.coefficients, 1.0), True))
    if a_bound is None:
        a_bound = max(float(np.sum(np.abs(ob.ball.stencil.b))) for ob in balls)
    return CertificateReport(float(alpha_claim), tuple(rows), float(factor), float(a_bound))


def write_certificate_csv(report: CertificateReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("N,min_psi_norm,scaled_norm,A_N1,dominant\n")
        for r in report.rows:
            fh.write(f"{r.N},{r.min_psi_norm!r},{r.scaled_norm!r},{r.A_N1!r},{str(r.dominant).lower()}\n")
        for line in report.summary().splitlines():
            fh.write(f"# {line}\n")
