"""Reference solutions: variable-speed transport and Burgers' equation.

Transport ("color") problem: ``u_t + c(x; mu) u_x = 0`` on ``x > 0`` with
inflow value ``u0(0)``; solved exactly along characteristics integrated by
classical RK4.

Burgers: ``u_t + (u^2/2)_x = 0`` with a decreasing sine ramp; a single shock
is born at ``t1 = 4 gamma / pi`` and its path is integrated from the
Rankine-Hugoniot condition with the two traced characteristic states.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .reduction import SnapshotMatrix

__all__ = [
    "MU_BOX",
    "BurgersProblem",
    "ColorFlow",
    "ColorProblem",
    "TransportMapSample",
    "bisect_roots",
    "burgers_characteristic_map",
    "burgers_shock_path",
    "burgers_solution",
    "burgers_u0",
    "color_solution",
    "color_speed",
    "color_speed_dx",
    "color_transport_map",
    "integrate_characteristic",
    "snapshot_grid",
    "write_shock_path_csv",
]

MU_BOX = ((0.25, 0.5), (2 * math.pi, 6 * math.pi), (math.pi, 1.1 * math.pi))
STEPS_PER_HORIZON = 1000


def color_speed(x, mu):
    mu1, mu2, mu3 = mu
    x = np.asarray(x, dtype=float)
    return 1.5 + mu1 * np.sin(mu2 * x) + 0.1 * np.cos(mu3 * x)


def color_speed_dx(x, mu):
    mu1, mu2, mu3 = mu
    x = np.asarray(x, dtype=float)
    return mu1 * mu2 * np.cos(mu2 * x) - 0.1 * mu3 * np.sin(mu3 * x)


def _rk4(rhs: Callable, y, t: float, n_steps: int):
    h = t / n_steps
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


@dataclass(frozen=True)
class ColorProblem:
    """Transport with speed ``c(x; mu)``; ``speed`` overrides the default family.

    ``u0_breakpoints`` lists discontinuities or kinks of ``u0`` so that
    snapshot sampling can place them exactly.
    """

    mu: tuple = (0.3, 2 * math.pi, math.pi)
    t_final: float = 1.0
    u0: Callable = field(default=lambda x: np.exp(-100.0 * (np.asarray(x) - 0.3) ** 2),
                         compare=False)
    u0_breakpoints: tuple = ()
    speed: Callable | None = field(default=None, compare=False)
    speed_dx: Callable | None = field(default=None, compare=False)
    c0: float = field(init=False)

    def __post_init__(self):
        if self.speed is None:
            mu = tuple(float(m) for m in self.mu)
            if len(mu) != 3:
                raise ValueError("mu must have three components")
            object.__setattr__(self, "mu", mu)
        x = np.linspace(0.0, 1.0, 2001)
        c0 = float(np.min(self.c(x)))
        if not c0 > 0.0:
            raise ValueError(f"speed not positive on [0, 1] (min {c0:.3g})")
        object.__setattr__(self, "c0", c0)

    @classmethod
    def advection(cls, t_final: float = 1.0) -> "ColorProblem":
        """Unit speed with inflow 1 into an empty domain: ``u = 1{x < t}``."""
        return cls(mu=(), t_final=t_final,
                   u0=lambda x: (np.asarray(x, dtype=float) <= 0.0).astype(float),
                   u0_breakpoints=(0.0,),
                   speed=lambda x: np.ones_like(np.asarray(x, dtype=float)),
                   speed_dx=lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    def with_mu(self, mu) -> "ColorProblem":
        return ColorProblem(tuple(mu), self.t_final, self.u0, self.u0_breakpoints,
                            self.speed, self.speed_dx)

    def c(self, x):
        return self.speed(x) if self.speed is not None else color_speed(x, self.mu)

    def c_dx(self, x):
        if self.speed is not None:
            if self.speed_dx is None:
                raise ValueError("custom speed without derivative")
            return self.speed_dx(x)
        return color_speed_dx(x, self.mu)

    def default_steps(self, t: float) -> int:
        return max(1, math.ceil(STEPS_PER_HORIZON * abs(t) / self.t_final - 1e-9))


def integrate_characteristic(x0, t: float, mu=None, direction: str = "forward",
                             n_steps: int | None = None, problem: ColorProblem | None = None):
    """RK4 solution of ``X' = +-c(X; mu)``, ``X(0) = x0`` at time ``t``."""
    if problem is None:
        problem = ColorProblem(mu=tuple(mu))
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be forward or backward, got {direction!r}")
    n_steps = problem.default_steps(t) if n_steps is None else int(n_steps)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    sign = 1.0 if direction == "forward" else -1.0
    x0 = np.asarray(x0, dtype=float)
    out = _rk4(lambda y: sign * problem.c(y), x0, float(t), n_steps)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TransportMapSample:
    t: float
    mu: tuple
    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray

    def is_strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0) and np.all(self.derivative > 0))


def color_transport_map(problem: ColorProblem, t: float, grid,
                        n_steps: int | None = None) -> TransportMapSample:
    """``X(t, x)`` and ``dX/dx`` by RK4 on the variational system.

    The derivative is the exact derivative of the discrete RK4 flow.
    """
    x = np.asarray(grid, dtype=float)
    n_steps = problem.default_steps(t) if n_steps is None else int(n_steps)
    n = x.size

    def rhs(y):
        X, J = y[:n], y[n:]
        return np.concatenate([problem.c(X), problem.c_dx(X) * J])

    y = _rk4(rhs, np.concatenate([x, np.ones(n)]), float(t), n_steps)
    return TransportMapSample(float(t), tuple(problem.mu), x, y[:n], y[n:])


def color_solution(problem: ColorProblem, x, t: float, n_steps: int | None = None):
    """``u0`` at the backward characteristic foot; inflow value for feet below 0."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return problem.u0(x)
    foot = np.asarray(integrate_characteristic(x, t, direction="backward",
                                               n_steps=n_steps, problem=problem))
    u_in = float(problem.u0(np.array([0.0]))[0])
    out = np.where(foot < 0.0, u_in, problem.u0(np.maximum(foot, 0.0)))
    return out if out.ndim else float(out)


class ColorFlow:
    """Forward images of a Lagrangian grid; inverting them gives ``u(., t)``.

    ``u0`` breakpoints are Lagrangian nodes, so jumps land exactly at their
    transported positions.
    """

    def __init__(self, problem: ColorProblem, n_lag: int = 2 ** 14 + 1):
        self.problem = problem
        self.xi = np.union1d(np.linspace(0.0, 1.0, n_lag),
                             [b for b in problem.u0_breakpoints if 0.0 <= b <= 1.0])
        self.X = self.xi.copy()
        self.t = 0.0
        self.u_in = float(problem.u0(np.array([0.0]))[0])

    def advance(self, t: float) -> "ColorFlow":
        if t < self.t:
            raise ValueError("flow can only move forward in time")
        if t > self.t:
            p = self.problem
            self.X = _rk4(p.c, self.X, t - self.t, p.default_steps(t - self.t))
            self.t = float(t)
        return self

    def foot(self, x):
        return np.interp(x, self.X, self.xi)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.t == 0:
            return self.problem.u0(x)
        return np.where(x < self.X[0], self.u_in, self.problem.u0(self.foot(x)))


def _color_columns(problem: ColorProblem, times: Sequence[float], x: np.ndarray) -> list:
    """Columns at all ``times`` from one forward sweep of a Lagrangian grid."""
    flow = ColorFlow(problem, max(4 * x.size, 2 ** 13))
    cols = [None] * len(times)
    for j in np.argsort(times, kind="stable"):
        cols[j] = flow.advance(float(times[j]))(x)
    return cols


# ---------------------------------------------------------------------------
# Burgers

def burgers_u0(x, x0: float = 0.3, gamma: float = 0.2):
    """1 left of the ramp, 0 right of it, half-sine ramp of half-width ``gamma``."""
    x = np.asarray(x, dtype=float)
    s = np.clip((x - x0) / (2.0 * gamma), -0.25, 0.25)
    out = 0.5 - 0.5 * np.sin(math.pi * 2.0 * s)
    return out if out.ndim else float(out)


def _burgers_u0_dx(x, x0, gamma):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x - x0) < gamma
    return np.where(inside, -math.pi / (4.0 * gamma) * np.cos(math.pi * (x - x0) / (2.0 * gamma)), 0.0)


def bisect_roots(g: Callable, lo, hi, n_iter: int = 64):
    """Vectorised bisection for increasing ``g`` with ``g(lo) <= 0 <= g(hi)``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0.0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ShockPath:
    t: np.ndarray
    x_s: np.ndarray
    slope: np.ndarray

    def __call__(self, t):
        """Cubic Hermite interpolation of the RK4 samples."""
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.t[0], self.t[-1])
        i = np.clip(np.searchsorted(self.t, tc, side="right") - 1, 0, self.t.size - 2)
        h = self.t[i + 1] - self.t[i]
        s = (tc - self.t[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        out = (h00 * self.x_s[i] + h10 * h * self.slope[i]
               + h01 * self.x_s[i + 1] + h11 * h * self.slope[i + 1])
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class BurgersProblem:
    """Sine-ramp Burgers problem on the physical window ``[0, length]``.

    The window ``[0, x0 + gamma + t_final/2 + margin]`` keeps the shock
    inside through ``t_final``; norms rescale it to the unit interval.
    """

    x0: float = 0.3
    gamma: float = 0.2
    t_final: float = 3.0
    margin: float = 0.2
    n_steps: int = 3000

    @property
    def t1(self) -> float:
        return 4.0 * self.gamma / math.pi

    @property
    def length(self) -> float:
        return self.x0 + self.gamma + 0.5 * self.t_final + self.margin

    def u0(self, x):
        return burgers_u0(x, self.x0, self.gamma)

    def u0_dx(self, x):
        return _burgers_u0_dx(x, self.x0, self.gamma)

    def _fold(self, t: float):
        """Local max/min of ``xi -> xi + t u0(xi)`` (where ``u0' = -1/t``)."""
        theta = math.acos(min(1.0, self.t1 / t))
        d = 2.0 * self.gamma / math.pi * theta
        return self.x0 - d, self.x0 + d

    def outer_roots(self, t: float, xs: float):
        """Leftmost and rightmost feet ``xi`` with ``xi + t u0(xi) = xs``."""
        if t <= self.t1:
            return self.x0, self.x0
        fa, fb = self._fold(t)

        def g(xi):
            return xi + t * float(self.u0(xi)) - xs

        def root(lo, hi):
            glo, ghi = g(lo), g(hi)
            if glo > 0.0 or ghi < 0.0:
                # rounding at the fold; the root sits on the bracket end
                if abs(glo) < 1e-12:
                    return lo
                if abs(ghi) < 1e-12:
                    return hi
                raise ArithmeticError(
                    f"no bracket at t={t!r}, x_s={xs!r}: g({lo!r})={glo:.3e}, g({hi!r})={ghi:.3e}")
            if glo == 0.0:
                return lo
            if ghi == 0.0:
                return hi
            return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

        return root(xs - t, fa), root(fb, xs)

    def _rhs(self, t: float, xs: float) -> float:
        lo, hi = self.outer_roots(t, xs)
        return 0.5 * (float(self.u0(lo)) + float(self.u0(hi)))

    @cached_property
    def shock_path(self) -> ShockPath:
        return burgers_shock_path(self, self.n_steps)

    def x_s(self, t):
        return self.shock_path(t)

    def interval(self, t: float):
        """``I(t)`` as ``(inf, sup)``; ``None`` before the shock exists."""
        if t <= self.t1:
            return None
        return self.outer_roots(t, float(self.x_s(t)))

    @cached_property
    def t2(self) -> float:
        """First time ``I(t)`` covers the ramp, by bisection to 1e-10."""
        lo, hi = self.t1, self.t_final

        def covered(t):
            a, b = self.interval(t)
            return a <= self.x0 - self.gamma and b >= self.x0 + self.gamma

        if not covered(hi):
            raise ArithmeticError("shock formation not complete by t_final")
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            if covered(mid):
                hi = mid
            else:
                lo = mid
        return hi


def burgers_shock_path(problem: BurgersProblem, n_steps: int) -> ShockPath:
    """RK4 for ``x_s' = (u_L + u_R)/2`` from ``t1`` to ``t_final``."""
    t0, tf = problem.t1, problem.t_final
    if (tf - t0) / n_steps > 1e-3:
        raise ValueError(f"n_steps={n_steps} gives a step above 1e-3")
    # first crossing: characteristics from the steepest point of the ramp
    xs = problem.x0 + float(problem.u0(problem.x0)) * t0
    ts = np.linspace(t0, tf, n_steps + 1)
    path = np.empty_like(ts)
    slope = np.empty_like(ts)
    path[0] = xs
    for i in range(n_steps):
        t, h = ts[i], ts[i + 1] - ts[i]
        k1 = problem._rhs(t, xs)
        k2 = problem._rhs(t + 0.5 * h, xs + 0.5 * h * k1)
        k3 = problem._rhs(t + 0.5 * h, xs + 0.5 * h * k2)
        k4 = problem._rhs(t + h, xs + h * k3)
        slope[i] = k1
        xs = xs + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        path[i + 1] = xs
    slope[-1] = problem._rhs(tf, xs)
    return ShockPath(ts, path, slope)


def burgers_characteristic_map(problem: BurgersProblem, t: float, grid) -> TransportMapSample:
    """``X(t, x)``: ``x + u0(x) t`` off ``I(t)``, the shock location on it."""
    x = np.asarray(grid, dtype=float)
    vals = x + problem.u0(x) * t
    der = 1.0 + problem.u0_dx(x) * t
    iv = problem.interval(t)
    if iv is not None:
        inside = (x > iv[0]) & (x < iv[1])
        vals = np.where(inside, float(problem.x_s(t)), vals)
        der = np.where(inside, 0.0, der)
    return TransportMapSample(float(t), (), x, vals, der)


def burgers_solution(problem: BurgersProblem, x, t: float):
    """Entropy solution; the left state is returned on the shock itself."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return problem.u0(x)

    def g(xi):
        return xi + t * problem.u0(xi) - x

    iv = problem.interval(t)
    if iv is None:
        xi = bisect_roots(g, x - t, x)
    else:
        xs = float(problem.x_s(t))
        left = x <= xs
        lo = np.where(left, x - t, iv[1])
        hi = np.where(left, iv[0], x)
        xi = bisect_roots(g, lo, hi)
    out = problem.u0(xi)
    return out if np.ndim(out) else float(out)


def write_shock_path_csv(problem: BurgersProblem, path, times) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x_s", "I_lo", "I_hi"])
        for t in times:
            iv = problem.interval(float(t))
            if iv is None:
                w.writerow([repr(float(t)), "nan", "nan", "nan"])
            else:
                w.writerow([repr(float(t)), repr(float(problem.x_s(t))),
                            repr(float(iv[0])), repr(float(iv[1]))])


# ---------------------------------------------------------------------------
# Snapshots

def snapshot_grid(problem, times: Sequence[float], mus: Sequence = (None,),
                  n_delta: int = 1025, jobs: int = 1) -> SnapshotMatrix:
    """Nodal samples at every ``(t, mu)``; columns ordered mu-major.

    Colour problems use ``[0, 1]``; Burgers uses its physical window.
    """
    if not len(times) or not len(mus):
        raise ValueError("empty sampling schedule")
    if isinstance(problem, BurgersProblem):
        x = np.linspace(0.0, problem.length, n_delta)
        problem.shock_path  # build once before fanning out
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            cols = list(pool.map(lambda t: burgers_solution(problem, x, float(t)), times))
        params = [(float(t), ()) for t in times]
    else:
        x = np.linspace(0.0, 1.0, n_delta)
        probs = [problem if mu is None else problem.with_mu(mu) for mu in mus]
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            blocks = list(pool.map(lambda p: _color_columns(p, times, x), probs))
        cols = [c for block in blocks for c in block]
        params = [(float(t), tuple(p.mu)) for p in probs for t in times]
    return SnapshotMatrix(np.stack(cols, axis=1), params, x)
