"""Concrete manifolds, ball schedules and MATS reduced deep networks.

Three solution families are used throughout:

* advection: ``u(x, t) = 1{x < t}`` on ``[0, 1]``;
* colour: variable-speed transport of a datum with a jump at ``x = 0.2``;
* Burgers: the sine-ramp shock problem of :mod:`rdnlab.hyperbolic`.

Degrees of freedom of a MATS network count the varying weights once and
each unrolled bisection step as one unit, since every step adds a fixed
block of layers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .chebfit import cheb_fit, cheb_to_two_layer
from .hyperbolic import (MU_BOX, BurgersProblem, ColorFlow, ColorProblem, _color_columns,
                         burgers_characteristic_map, burgers_solution, color_transport_map,
                         snapshot_grid)
from .invnet import (BisectionInverseNetwork, MonotoneNetwork, MonotonicityError,
                     build_inverse)
from .netcore import (AffineLayer, DeepNetwork, FullTwoLayerSolution, build_full_two_layer,
                      compose_networks, grid_norm)
from .nwidth import build_ball, gram_schmidt, vandermonde_stencil
from .reduction import SnapshotMatrix, pod_errors

__all__ = [
    "JUMP_AT",
    "BurgersRDN",
    "ColorRDN",
    "advection_ball",
    "advection_snapshots",
    "burgers_y_ball",
    "burgers_y_snapshots",
    "color_jump_ball",
    "color_jump_problem",
    "monotone_two_layer",
    "SeparationResult",
    "advection_separation",
    "box_mus",
    "burgers_separation",
    "cheb_split",
    "color_separation",
    "pod_error_curve",
]

JUMP_AT = 0.2
COLOR_T_MAX = 0.35


# ---------------------------------------------------------------------------
# shared helpers

def monotone_two_layer(sol: FullTwoLayerSolution) -> MonotoneNetwork:
    """Certify a two-layer interpolant from its nodal values (exact for PL)."""
    f = sol.nodal_values
    d = np.diff(f)
    i = int(np.argmin(d))
    if d[i] < -1e-10:
        x = sol.grid
        raise MonotonicityError((x[i], x[i + 1], f[i], f[i + 1]))
    return MonotoneNetwork(sol.network, sol.interval, float(d[i] / sol.dx), fast=sol)


def pod_error_curve(snapshots: SnapshotMatrix, ms: Sequence[int]) -> np.ndarray:
    return pod_errors(snapshots, list(ms))[1]


def _first_true(pred, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Smallest ``x`` in ``[lo, hi]`` with monotone predicate ``pred(x)``."""
    if pred(lo):
        return lo
    if not pred(hi):
        return hi
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# advection

def advection_snapshots(n_snap: int = 256, n_delta: int = 4096) -> SnapshotMatrix:
    return snapshot_grid(ColorProblem.advection(), np.linspace(0.0, 1.0, n_snap), (None,), n_delta)


def advection_ball(N: int, n_delta: int | None = None):
    """Strips ``1{tau_n <= x < tau_n + dt}`` with ``dt = 1/(2N + 2)``."""
    n_delta = 64 * 32 * 2 + 1 if n_delta is None else n_delta
    dt = 1.0 / (2 * N + 2)
    taus = dt * np.arange(2 * N)
    st = vandermonde_stencil(2, 1)
    x = np.linspace(0.0, 1.0, n_delta)
    ball = build_ball(lambda x, t: (x < t).astype(float), taus, dt, st,
                      lambda t: t + 0.5 * dt, 0.5 * dt, x)
    return gram_schmidt(ball)


# ---------------------------------------------------------------------------
# colour problem with a jump in the datum

def _jump_datum(x):
    x = np.asarray(x, dtype=float)
    return (x < JUMP_AT).astype(float) + 0.4 * np.exp(-40.0 * (x - 0.55) ** 2)


def _smooth_part(x):
    return 0.4 * np.exp(-40.0 * (np.asarray(x, dtype=float) - 0.55) ** 2)


def color_jump_problem(mu=(0.3, 2 * math.pi, math.pi)) -> ColorProblem:
    """Jump of height 1 at ``x = 0.2`` on top of a smooth bump."""
    return ColorProblem(mu=tuple(mu), t_final=COLOR_T_MAX, u0=_jump_datum,
                        u0_breakpoints=(JUMP_AT,))


def color_jump_ball(N: int, mu=(0.3, 2 * math.pi, math.pi), K: int = 6, s1: int = 4,
                    t_start: float = 0.02, t_span: float = 0.3, n_delta: int = 8193):
    """Time differences of the moving jump; supports are disjoint strips."""
    prob = color_jump_problem(mu)
    dt = t_span / (2 * N * K)
    taus = t_start + K * dt * np.arange(2 * N)
    st = vandermonde_stencil(K, s1)
    x = np.linspace(0.0, 1.0, n_delta)
    ends = []
    for tau in taus:
        a = color_transport_map(prob, tau, [JUMP_AT]).values[0]
        b = color_transport_map(prob, tau + (K - 1) * dt, [JUMP_AT]).values[0]
        ends.append((a, b))
    ends = np.array(ends)
    centers = 0.5 * (ends[:, 0] + ends[:, 1])
    radius = 0.5 * (ends[:, 1] - ends[:, 0]) + 0.25 / (n_delta - 1)
    lookup = dict(zip(taus.tolist(), centers.tolist()))

    times = (taus[:, None] + dt * np.arange(K)[None, :]).ravel()
    cols = dict(zip(times.tolist(), _color_columns(prob, times, x)))

    def u(xg, t):
        return cols[float(t)]

    ball = build_ball(u, taus, dt, st, lambda t: lookup[float(t)], radius, x)
    return gram_schmidt(ball)


@dataclass
class ColorRDN:
    """``u0bar o T_flat`` for one ``(t, mu)``.

    ``T`` is replaced by an ``n_cheb``-term Chebyshev interpolant lowered to
    a two-layer net on ``n_delta`` nodes; its bisection inverse takes
    ``l_inv`` steps.  The head is the PL interpolant of the smooth part of
    the datum plus one threshold unit for the jump; it is shared by every
    member of the manifold.
    """

    problem: ColorProblem
    t: float
    n_cheb: int
    l_inv: int
    n_delta: int = 2 ** 14
    flow: ColorFlow | None = None

    @cached_property
    def transport(self) -> MonotoneNetwork:
        T = lambda x: color_transport_map(self.problem, self.t, x).values
        series = cheb_fit(T, self.n_cheb - 1, (0.0, 1.0))
        sol = cheb_to_two_layer(series, self.n_delta)
        try:
            return monotone_two_layer(sol)
        except MonotonicityError as err:
            raise MonotonicityError(err.witness) from ValueError(
                f"t={self.t}, mu={self.problem.mu}, n_cheb={self.n_cheb}")

    @cached_property
    def inverse(self) -> BisectionInverseNetwork:
        return build_inverse(self.transport, self.l_inv)

    @cached_property
    def head_smooth(self) -> FullTwoLayerSolution:
        x = np.linspace(0.0, 1.0, self.n_delta)
        return build_full_two_layer(self.n_delta, _smooth_part(x))

    @property
    def head_network(self) -> DeepNetwork:
        """``y -> PL(y) + step(0.2 - y)`` as one two-layer network."""
        hs = self.head_smooth
        hid = hs.hidden_layer()
        w1 = np.vstack([hid.weights, [[-1.0]]])
        b1 = np.concatenate([hid.biases, [JUMP_AT]])
        acts = np.concatenate([hid.activations, [1]])
        w2 = np.concatenate([hs.outer_weights, [1.0]])[None, :]
        return DeepNetwork((AffineLayer(w1, b1, acts), AffineLayer(w2, [0.0])))

    def head(self, y):
        y = np.asarray(y, dtype=float)
        return self.head_smooth(y) + (JUMP_AT - y > 0.0).astype(float)

    @property
    def dof(self) -> int:
        return self.n_cheb + self.l_inv

    def __call__(self, x):
        return self.head(self.inverse(x))

    def jump_location(self) -> float:
        """Where ``T_flat`` first reaches the datum's jump position."""
        inv = self.inverse
        return _first_true(lambda x: inv(np.array([x]))[0] >= JUMP_AT, 0.0, 1.0)

    @cached_property
    def _flow(self) -> ColorFlow:
        if self.flow is not None and self.flow.t == self.t:
            return self.flow
        return ColorFlow(self.problem).advance(self.t)

    def exact(self, x):
        return self._flow(np.asarray(x, dtype=float))

    def l2_error(self, n_quad: int = 2 ** 14) -> float:
        x_true = color_transport_map(self.problem, self.t, [JUMP_AT]).values[0]
        return grid_norm(self, self.exact, (0.0, 1.0), "l2", n_quad,
                         breakpoints=[x_true, self.jump_location()])


# ---------------------------------------------------------------------------
# Burgers

def burgers_y_snapshots(problem: BurgersProblem, times, n_delta: int = 4097) -> SnapshotMatrix:
    """``Y(t, x) = X(t, x) - x`` on the physical window."""
    x = np.linspace(0.0, problem.length, n_delta)
    cols = [burgers_characteristic_map(problem, t, x).values - x for t in times]
    return SnapshotMatrix(np.stack(cols, axis=1), [(float(t), ()) for t in times], x)


def burgers_y_ball(problem: BurgersProblem, N: int, t_start: float = 0.6,
                   n_delta: int = 8193):
    """Second differences (-1, 2, -1) of ``Y`` with shock steps of ``nu``.

    After full formation the shock moves at speed 1/2, so time steps of
    ``2 nu`` move it by ``nu`` and each ``phi_n`` is a hat on
    ``(x_s(tau_n1), x_s(tau_n3))``.
    """
    if t_start <= problem.t2:
        raise ValueError("t_start must follow full shock formation")
    span = 0.5 * (problem.t_final - t_start)
    nu = span / (6 * N)
    dt = 2.0 * nu
    taus = t_start + 3 * dt * np.arange(2 * N)
    st = vandermonde_stencil(3, 2)
    x = np.linspace(0.0, problem.length, n_delta)

    def Y(xg, t):
        return burgers_characteristic_map(problem, t, xg).values - xg

    ball = build_ball(Y, taus, dt, st, lambda t: float(problem.x_s(t + dt)), nu, x)
    return gram_schmidt(ball)


def _step_layer_network(scale: float, shift: float) -> DeepNetwork:
    """``x -> x + scale * step(x + shift)`` as a two-layer network."""
    w1 = np.array([[1.0], [-1.0], [1.0]])
    b1 = np.array([0.0, 0.0, shift])
    acts = [0, 0, 1]
    w2 = np.array([[1.0, -1.0, scale]])
    return DeepNetwork((AffineLayer(w1, b1, acts), AffineLayer(w2, [0.0])))


@dataclass
class BurgersRDN:
    """``u0bar o T2 o (T12bar o T11)_flat`` for one time ``t``.

    ``T11(x) = x + |I| step(x - xi_L)`` skips the fan interval ``I(t)`` so
    ``T12bar o T11`` is increasing; ``T2`` reinstates the skip after the
    inversion.  ``literal=True`` uses the shift ``-x_s(t)`` for both step
    units instead of ``-xi_L``.
    """

    problem: BurgersProblem
    t: float
    l_inv: int
    n_delta: int = 2 ** 14
    literal: bool = False

    @property
    def domain(self) -> tuple[float, float]:
        return (-self.problem.t_final, self.problem.length)

    @cached_property
    def weights(self) -> dict:
        p, t = self.problem, self.t
        iv = p.interval(t)
        width = 0.0 if iv is None else iv[1] - iv[0]
        if iv is None:
            shift = -p.x_s(p.t1) if self.literal else -p.x0
        else:
            shift = -float(p.x_s(t)) if self.literal else -iv[0]
        return {"w12": t, "w111": width, "w112": shift, "w21": width, "w22": shift}

    @property
    def shared_weights(self) -> int:
        return 2  # w111 = w21, w112 = w22

    @property
    def dof(self) -> int:
        return len(self.weights) - self.shared_weights + self.l_inv

    @cached_property
    def u0bar(self) -> FullTwoLayerSolution:
        a, b = self.domain
        lo, hi = a, b + self.problem.t_final
        x = np.linspace(lo, hi, self.n_delta)
        return build_full_two_layer(self.n_delta, self.problem.u0(x), (lo, hi))

    def t11(self, x):
        w = self.weights
        return x + w["w111"] * (x + w["w112"] > 0.0)

    def t12bar(self, x):
        return x + self.weights["w12"] * self.u0bar(x)

    def t2(self, y):
        w = self.weights
        return y + w["w21"] * (y + w["w22"] > 0.0)

    def _t12bar_network(self) -> DeepNetwork:
        hid = self.u0bar.hidden_layer()
        w1 = np.vstack([hid.weights, [[1.0], [-1.0]]])
        b1 = np.concatenate([hid.biases, [0.0, 0.0]])
        w2 = np.concatenate([self.weights["w12"] * self.u0bar.outer_weights, [1.0, -1.0]])
        return DeepNetwork((AffineLayer(w1, b1, "relu"), AffineLayer(w2[None, :], [0.0])))

    @cached_property
    def t1bar(self) -> MonotoneNetwork:
        """``T12bar o T11`` as a monotone scalar network on the foot domain."""
        a, b = self.domain
        f = lambda x: self.t12bar(self.t11(np.asarray(x, dtype=float)))
        xs = np.linspace(a, b, 4 * self.n_delta + 1)
        ys = f(xs)
        d = np.diff(ys)
        i = int(np.argmin(d))
        if d[i] < -1e-10:
            raise MonotonicityError((xs[i], xs[i + 1], ys[i], ys[i + 1]))
        w = self.weights
        net = compose_networks(self._t12bar_network(),
                               _step_layer_network(w["w111"], w["w112"]))
        return MonotoneNetwork(net, (a, b), float(d[i] / (xs[1] - xs[0])), fast=f)

    @cached_property
    def inverse(self) -> BisectionInverseNetwork:
        return build_inverse(self.t1bar, self.l_inv)

    def __call__(self, x):
        return self.u0bar(self.t2(self.inverse(np.asarray(x, dtype=float))))

    def jump_location(self) -> float:
        w = self.weights
        inv = self.inverse
        return _first_true(lambda x: inv(np.array([x]))[0] + w["w22"] > 0.0,
                           0.0, self.problem.length)

    def exact(self, x):
        return burgers_solution(self.problem, np.asarray(x, dtype=float), self.t)

    def l2_error(self, n_quad: int = 2 ** 14) -> float:
        """L2 error on the window rescaled to the unit interval."""
        L = self.problem.length
        bps = [self.jump_location()]
        if self.problem.interval(self.t) is not None:
            bps.append(float(self.problem.x_s(self.t)))
        raw = grid_norm(self, self.exact, (0.0, L), "l2", n_quad, breakpoints=bps)
        return raw / math.sqrt(L)


# ---------------------------------------------------------------------------
# separation sweeps

def cheb_split(M: int) -> tuple[int, int]:
    """Split a dof budget into (Chebyshev terms, bisection steps)."""
    l_inv = max(1, math.ceil(M / 3))
    return M - l_inv, l_inv


def box_mus(levels: int = 2) -> list:
    """Tensor grid over the parameter box, corners included."""
    axes = [np.linspace(lo, hi, levels) for lo, hi in MU_BOX]
    return [tuple(float(v) for v in mu) for mu in
            np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)]


@dataclass(frozen=True)
class SeparationResult:
    ms: np.ndarray
    pod_error: np.ndarray
    rdn_error: np.ndarray
    dof: np.ndarray


def color_separation(ms, mus, snap_times, test_times, n_delta: int = 4097,
                     jobs: int = 1) -> SeparationResult:
    """POD worst-case error against the colour MATS network at equal dof."""
    snaps = snapshot_grid(color_jump_problem(), snap_times, mus, n_delta, jobs=jobs)
    pod = pod_error_curve(snaps, ms)
    cases = [(color_jump_problem(mu), float(t)) for mu in mus for t in test_times]

    def worst_for_case(case):
        prob, t = case
        flow = ColorFlow(prob).advance(t)
        out = []
        for M in ms:
            n_cheb, l_inv = cheb_split(M)
            rdn = ColorRDN(prob, t, n_cheb, l_inv, flow=flow)
            out.append(rdn.l2_error())
        return out

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        table = np.array(list(pool.map(worst_for_case, cases)))
    return SeparationResult(np.asarray(ms), pod, table.max(axis=0), np.asarray(ms))


def advection_separation(ms, n_snap: int = 256, n_delta: int = 4096,
                         test_times=None) -> SeparationResult:
    """Pure translation: one shift weight reproduces every member exactly."""
    snaps = advection_snapshots(n_snap, n_delta)
    pod = pod_error_curve(snaps, ms)
    test_times = np.linspace(0.0, 1.0, 17) if test_times is None else test_times
    worst = 0.0
    for t in test_times:
        # head: step(-y); map: y = x - t
        head = lambda y: (-np.asarray(y) >= 0.0).astype(float)
        rdn = lambda x, t=t: head(np.asarray(x) - t)
        exact = lambda x, t=t: (np.asarray(x) <= t).astype(float)
        worst = max(worst, grid_norm(rdn, exact, (0.0, 1.0), "l2", 2 ** 14, breakpoints=[t]))
    return SeparationResult(np.asarray(ms), pod, np.full(len(ms), worst), np.ones(len(ms), int))


def burgers_separation(l_invs, times, problem: BurgersProblem | None = None,
                       jobs: int = 1) -> SeparationResult:
    """Worst-case Burgers MATS error over ``times`` for each ``l_inv``.

    The POD column is the worst-case projection error of the snapshot
    family ``u(., t)``, ``t`` in ``times``, at the same dof.
    """
    problem = BurgersProblem() if problem is None else problem
    problem.shock_path
    dofs = [BurgersRDN(problem, float(times[0]), L).dof for L in l_invs]

    def errs_for(t):
        return [BurgersRDN(problem, float(t), L).l2_error() for L in l_invs]

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        table = np.array(list(pool.map(errs_for, times)))
    snaps = snapshot_grid(problem, np.linspace(0.0, problem.t_final, 256), n_delta=4097, jobs=jobs)
    usable = [d for d in dofs if d <= min(snaps.values.shape)]
    pod = np.full(len(dofs), np.nan)
    pod[:len(usable)] = pod_error_curve(snaps, usable)
    return SeparationResult(np.asarray(l_invs), pod, table.max(axis=0), np.asarray(dofs))
