"""Approximate inverses of monotone networks by unrolled bisection.

One bisection step is itself a network ``g_f: [a, b, x] -> [a', b', x]``
built from ``f``'s own layers plus three small gadget layers; stacking
``l_inv`` copies between a fixed input adapter ``x -> [a, b, x]`` and the
output adapter ``[a, b, x] -> (a + b)/2`` gives ``f_flat`` with
``|f_flat(x) - f^{-1}(x)| <= (b - a) 2^{-l_inv}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .netcore import (ActivationKind, AffineLayer, DeepNetwork, compose_networks,
                      eval_network)

__all__ = [
    "BisectionInverseNetwork",
    "MATSComposition",
    "MonotoneNetwork",
    "MonotonicityError",
    "build_bisection_step",
    "build_inverse",
    "check_monotone",
    "eval_mats",
]

ID = ActivationKind.IDENTITY
RELU = ActivationKind.RELU
STEP = ActivationKind.THRESHOLD
MONO_TOL = 1e-10


class MonotonicityError(ValueError):
    """``f(x_i) > f(x_{i+1}) + tol``; ``witness = (x_i, x_{i+1}, f_i, f_{i+1})``."""

    def __init__(self, witness):
        x0, x1, f0, f1 = witness
        super().__init__(f"not monotone: f({x0!r})={f0!r} > f({x1!r})={f1!r}")
        self.witness = witness


@dataclass(frozen=True)
class MonotoneNetwork:
    """A scalar network certified non-decreasing on ``domain``.

    ``fast`` is an optional evaluator with identical values (for example the
    interpolating evaluator of a two-layer solution); it only affects speed.
    """

    net: DeepNetwork
    domain: tuple[float, float]
    monotone_certificate: float
    fast: Callable | None = field(default=None, compare=False, repr=False)

    def __call__(self, x):
        if self.fast is not None:
            return self.fast(x)
        return eval_network(self.net, x)

    @property
    def image(self) -> tuple[float, float]:
        a, b = self.domain
        fa, fb = self(np.array([a, b]))
        return float(fa), float(fb)


def check_monotone(net: DeepNetwork, domain=(0.0, 1.0), n_check: int = 1025,
                   fast: Callable | None = None) -> MonotoneNetwork:
    """Certify ``f(x_i) <= f(x_{i+1}) + 1e-10`` on ``n_check`` equidistant points."""
    if n_check < 2:
        raise ValueError("n_check must be >= 2")
    if net.dims[0] != 1 or net.dims[-1] != 1:
        raise ValueError(f"need a scalar network, got dims {net.dims}")
    a, b = map(float, domain)
    x = np.linspace(a, b, n_check)
    y = eval_network(net, x)
    d = np.diff(y)
    i = int(np.argmin(d))
    if d[i] < -MONO_TOL:
        raise MonotonicityError((x[i], x[i + 1], y[i], y[i + 1]))
    return MonotoneNetwork(net, (a, b), float(d[i] / (x[1] - x[0])), fast)


def _embed(layer: AffineLayer, act) -> AffineLayer:
    """``[a, b, x, z] -> [a, b, x, W z + c]`` with identity lanes."""
    n_out, n_in = layer.weights.shape
    w = np.zeros((3 + n_out, 3 + n_in))
    w[:3, :3] = np.eye(3)
    w[3:, 3:] = layer.weights
    bias = np.concatenate([np.zeros(3), layer.biases])
    acts = [ID] * 3 + list(act)
    return AffineLayer(w, bias, acts)


def build_bisection_step(f: MonotoneNetwork, width: float | None = None) -> tuple[AffineLayer, ...]:
    """Layers of ``g_f: [a, b, x] -> [a', b', x]``, one halving step.

    ``width`` is the constant ``c`` of the branch gadget; it must be at least
    the current interval width and defaults to the width of ``f.domain``.
    All layers carry activations so the step can be chained; the caller
    strips the last one when the step ends a network.
    """
    c = float(width if width is not None else f.domain[1] - f.domain[0])
    layers = [AffineLayer(np.vstack([np.eye(3), [0.5, 0.5, 0.0]]), np.zeros(4), [ID] * 4)]
    inner = f.net.layers
    for l, layer in enumerate(inner):
        act = layer.activations if l < len(inner) - 1 else [ID] * layer.n_out
        layers.append(_embed(layer, act))
    layers.append(AffineLayer([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, -1, 1]],
                              np.zeros(4), [ID, ID, ID, STEP]))
    layers.append(AffineLayer([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0],
                               [-0.5, 0.5, 0, -c], [-0.5, 0.5, 0, c]],
                              [0, 0, 0, 0, -c], [ID, ID, ID, RELU, RELU]))
    # b' = b - s2; the printed second row (a - s2) would discard b
    layers.append(AffineLayer([[1, 0, 0, 1, 0], [0, 1, 0, 0, -1], [0, 0, 1, 0, 0]],
                              np.zeros(3), [ID] * 3))
    return tuple(layers)


@dataclass(frozen=True)
class BisectionInverseNetwork:
    net: DeepNetwork
    l_inv: int
    source: MonotoneNetwork
    error_bound: float

    @property
    def step_depth(self) -> int:
        return self.source.net.depth + 4

    @property
    def domain(self) -> tuple[float, float]:
        return self.source.image

    @property
    def image(self) -> tuple[float, float]:
        return self.source.domain

    def bracket(self, x, steps: int | None = None):
        """``(a_k, b_k)`` after ``steps`` halvings, same arithmetic as ``net``."""
        steps = self.l_inv if steps is None else steps
        x = np.asarray(x, dtype=float)
        a0, b0 = self.source.domain
        c = b0 - a0
        a = np.full(x.shape, a0)
        b = np.full(x.shape, b0)
        for _ in range(steps):
            tau = self.source(0.5 * a + 0.5 * b)
            w = (tau - x > 0.0).astype(float)
            h = -0.5 * a + 0.5 * b
            s1 = np.maximum(h - c * w, 0.0)
            s2 = np.maximum(h + c * w - c, 0.0)
            a = a + s1
            b = b - s2
        return a, b

    def __call__(self, x):
        """Fast evaluation mirroring the network's arithmetic step by step."""
        a, b = self.bracket(x)
        out = 0.5 * a + 0.5 * b
        return out if out.ndim else float(out)


def build_inverse(f: MonotoneNetwork, l_inv: int) -> BisectionInverseNetwork:
    """Stack ``l_inv`` bisection steps between the fixed adapters."""
    if l_inv < 1:
        raise ValueError("l_inv must be >= 1")
    a, b = f.domain
    step = build_bisection_step(f)
    adapter_in = AffineLayer([[0.0], [0.0], [1.0]], [a, b, 0.0], [ID] * 3)
    adapter_out = AffineLayer([[0.5, 0.5, 0.0]], [0.0])
    net = DeepNetwork((adapter_in,) + step * l_inv + (adapter_out,))
    return BisectionInverseNetwork(net, int(l_inv), f, (b - a) * 2.0 ** (-l_inv))


def _as_network(obj) -> DeepNetwork:
    if isinstance(obj, DeepNetwork):
        return obj
    for attr in ("net", "network"):
        if hasattr(obj, attr):
            return _as_network(getattr(obj, attr))
    if hasattr(obj, "to_network"):
        return obj.to_network()
    raise TypeError(f"cannot flatten {type(obj).__name__} into a network")


@dataclass(frozen=True)
class MATSComposition:
    """``head o T_k o ... o T_1`` with ``maps = [T_1, ..., T_k]``.

    At construction, the sampled image of each map must lie in the domain of
    the next one (and in ``head_domain`` when given), up to ``tol``.
    """

    head: object
    maps: tuple
    head_domain: tuple[float, float] | None = None
    n_check: int = 257
    tol: float = 1e-9

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        for j, tj in enumerate(maps):
            nxt = maps[j + 1].domain if j + 1 < len(maps) else self.head_domain
            if nxt is None:
                continue
            lo, hi = tj.domain
            y = np.asarray(tj(np.linspace(lo, hi, self.n_check)))
            if y.min() < nxt[0] - self.tol or y.max() > nxt[1] + self.tol:
                raise ValueError(
                    f"map {j + 1} has image [{y.min():.6g}, {y.max():.6g}] outside "
                    f"the next domain [{nxt[0]:.6g}, {nxt[1]:.6g}]")

    def __call__(self, x):
        return eval_mats(self, x)

    def to_network(self) -> DeepNetwork:
        net = _as_network(self.maps[0])
        for tj in self.maps[1:]:
            net = compose_networks(_as_network(tj), net)
        return compose_networks(_as_network(self.head), net)


def eval_mats(m: MATSComposition, x):
    y = np.asarray(x, dtype=float)
    for tj in m.maps:
        y = np.asarray(tj(y), dtype=float)
    return m.head(y)
