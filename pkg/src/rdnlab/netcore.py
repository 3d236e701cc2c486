"""Feed-forward networks with ReLU, threshold and identity units.

A network is an ordered list of affine layers ``z -> W z + b``; every layer
except the last one is followed by a per-neuron activation.  Evaluation is
vectorised over the sample axis: inputs of shape ``(n,)`` are treated as
``n`` scalar samples, inputs of shape ``(width, n)`` as ``n`` vector samples.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ActivationKind",
    "AffineLayer",
    "DeepNetwork",
    "FullTwoLayerSolution",
    "NetworkStructureError",
    "affine_network",
    "build_full_two_layer",
    "combine_two_layer",
    "compose_networks",
    "eval_network",
    "grid_norm",
]


class NetworkStructureError(ValueError):
    """Raised when layer shapes do not chain."""


class ActivationKind(enum.IntEnum):
    RELU = 0
    THRESHOLD = 1
    IDENTITY = 2

    @classmethod
    def parse(cls, tag) -> "ActivationKind":
        if isinstance(tag, cls):
            return tag
        if isinstance(tag, (int, np.integer)):
            return cls(int(tag))
        try:
            return cls[str(tag).upper()]
        except KeyError:
            raise ValueError(f"unknown activation {tag!r}") from None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self is ActivationKind.RELU:
            return np.maximum(x, 0.0)
        if self is ActivationKind.THRESHOLD:
            # strict inequality: threshold(0) = 0
            return (x > 0.0).astype(float)
        return x


def _as_kinds(acts, width: int) -> np.ndarray:
    if isinstance(acts, (str, ActivationKind)):
        acts = [acts] * width
    kinds = np.array([int(ActivationKind.parse(a)) for a in acts], dtype=np.int8)
    if kinds.shape != (width,):
        raise NetworkStructureError(
            f"activation vector has length {kinds.size}, expected {width}")
    return kinds


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AffineLayer:
    """One affine map, optionally followed by activations.

    ``activations`` is ``None`` only on the final layer of a network.
    """

    weights: np.ndarray
    biases: np.ndarray
    activations: np.ndarray | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, ndmin=2)
        b = np.array(self.biases, dtype=float).reshape(-1)
        if w.ndim != 2:
            raise NetworkStructureError("weights must be a matrix")
        if b.shape[0] != w.shape[0]:
            raise NetworkStructureError(
                f"bias length {b.shape[0]} != weight rows {w.shape[0]}")
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "biases", _readonly(b))
        if self.activations is not None:
            kinds = _as_kinds(self.activations, w.shape[0])
            object.__setattr__(self, "activations", _readonly(kinds))

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def with_activations(self, acts) -> "AffineLayer":
        return AffineLayer(self.weights, self.biases, acts)

    def apply(self, z: np.ndarray) -> np.ndarray:
        y = self.weights @ z + self.biases[:, None]
        if self.activations is None:
            return y
        return _activate(y, self.activations)


def _activate(y: np.ndarray, kinds: np.ndarray) -> np.ndarray:
    relu = (kinds == ActivationKind.RELU)[:, None]
    thr = (kinds == ActivationKind.THRESHOLD)[:, None]
    out = np.where(relu, np.maximum(y, 0.0), y)
    if thr.any():
        out = np.where(thr, (y > 0.0).astype(float), out)
    return out


@dataclass(frozen=True)
class DeepNetwork:
    """``A_L o rho_{L-1} A_{L-1} o ... o rho_1 A_1``."""

    layers: tuple[AffineLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 1:
            raise NetworkStructureError("a network needs at least one layer")
        for i, (lo, hi) in enumerate(zip(layers[:-1], layers[1:])):
            if lo.activations is None:
                raise NetworkStructureError(f"hidden layer {i + 1} has no activations")
            if hi.n_in != lo.n_out:
                raise NetworkStructureError(
                    f"layer {i + 2} expects width {hi.n_in}, layer {i + 1} gives {lo.n_out}")
        if layers[-1].activations is not None:
            layers = layers[:-1] + (AffineLayer(layers[-1].weights, layers[-1].biases),)
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_arrays(cls, weights: Sequence, biases: Sequence,
                    activations: Sequence = ()) -> "DeepNetwork":
        if len(weights) != len(biases) or len(activations) != len(weights) - 1:
            raise NetworkStructureError("need L weights, L biases and L-1 activation vectors")
        acts = list(activations) + [None]
        return cls(tuple(AffineLayer(w, b, a) for w, b, a in zip(weights, biases, acts)))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.layers[0].n_in,) + tuple(l.n_out for l in self.layers)

    def __call__(self, x):
        return eval_network(self, x)


def eval_network(net: DeepNetwork, x):
    """Evaluate ``net`` at ``x``.

    Scalars and 1-d arrays are samples of a scalar input; a 2-d array is
    ``(input width, n samples)``.  Scalar-output networks return the same
    shape as a scalar/1-d input.
    """
    x = np.asarray(x, dtype=float)
    scalar_in = x.ndim < 2
    z = x.reshape(1, -1) if scalar_in else x
    if z.shape[0] != net.layers[0].n_in:
        raise NetworkStructureError(
            f"input width {z.shape[0]} != network input width {net.layers[0].n_in}")
    for layer in net.layers:
        z = layer.apply(z)
    if scalar_in and z.shape[0] == 1:
        return z.reshape(x.shape)
    return z


def affine_network(slope: float, intercept: float = 0.0) -> DeepNetwork:
    """Single-layer network ``x -> slope * x + intercept``."""
    return DeepNetwork((AffineLayer([[slope]], [intercept]),))


def compose_networks(outer: DeepNetwork, inner: DeepNetwork) -> DeepNetwork:
    """Network for ``outer o inner``; the joint gets identity activations."""
    if inner.dims[-1] != outer.dims[0]:
        raise NetworkStructureError(
            f"inner output width {inner.dims[-1]} != outer input width {outer.dims[0]}")
    last = inner.layers[-1]
    joint = last.with_activations([ActivationKind.IDENTITY] * last.n_out)
    return DeepNetwork(inner.layers[:-1] + (joint,) + outer.layers)


@dataclass(frozen=True)
class FullTwoLayerSolution:
    """Continuous piecewise-linear function as a 2-layer ReLU network.

    Hidden units are the fixed ramps ``sigma((x - a)/dx - (n - 2))`` for
    ``n = 1..n_delta``; only ``outer_weights`` vary.
    """

    n_delta: int
    outer_weights: np.ndarray
    interval: tuple[float, float] = (0.0, 1.0)
    _nodal: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_delta < 2:
            raise ValueError(f"invalid grid: n_delta={self.n_delta} < 2")
        w = np.array(self.outer_weights, dtype=float).reshape(-1)
        if w.size != self.n_delta:
            raise ValueError(f"expected {self.n_delta} weights, got {w.size}")
        a, b = map(float, self.interval)
        if not b > a:
            raise ValueError("degenerate interval")
        object.__setattr__(self, "outer_weights", _readonly(w))
        object.__setattr__(self, "interval", (a, b))
        object.__setattr__(self, "_nodal", _readonly(np.cumsum(np.cumsum(w))))

    @property
    def dx(self) -> float:
        a, b = self.interval
        return (b - a) / (self.n_delta - 1)

    @property
    def grid(self) -> np.ndarray:
        a, b = self.interval
        return np.linspace(a, b, self.n_delta)

    @property
    def nodal_values(self) -> np.ndarray:
        return self._nodal

    def hidden_layer(self) -> AffineLayer:
        a = self.interval[0]
        n = np.arange(1, self.n_delta + 1)
        w1 = np.full((self.n_delta, 1), 1.0 / self.dx)
        b1 = 2.0 - n - a / self.dx
        return AffineLayer(w1, b1, ActivationKind.RELU)

    @property
    def network(self) -> DeepNetwork:
        return DeepNetwork((self.hidden_layer(),
                            AffineLayer(self.outer_weights[None, :], [0.0])))

    def __call__(self, x):
        """Fast evaluation; identical to ``eval_network(self.network, x)``."""
        x = np.asarray(x, dtype=float)
        a, b = self.interval
        f = self._nodal
        out = np.interp(x, self.grid, f)
        left = x < a
        if np.any(left):
            s = (x[left] - a) / self.dx
            out[left] = f[0] * np.maximum(s + 1.0, 0.0)
        right = x > b
        if np.any(right):
            slope = (f[-1] - f[-2]) / self.dx
            out[right] = f[-1] + slope * (x[right] - b)
        return out if out.ndim else float(out)

    def derivative(self, x):
        """Cell slopes (right-continuous) of the interpolant."""
        x = np.asarray(x, dtype=float)
        slopes = np.diff(self._nodal) / self.dx
        j = np.clip(np.floor((x - self.interval[0]) / self.dx).astype(int),
                    0, self.n_delta - 2)
        return slopes[j]


def build_full_two_layer(n_delta: int, samples, interval=(0.0, 1.0)) -> FullTwoLayerSolution:
    """Outer weights reproducing the nodal ``samples`` on the equidistant grid.

    Nodal values are the double cumulative sum of the weights, so the weights
    follow from two bidiagonal (difference) solves.
    """
    if n_delta < 2:
        raise ValueError(f"invalid grid: n_delta={n_delta} < 2")
    f = np.asarray(samples, dtype=float).reshape(-1)
    if f.size != n_delta:
        raise ValueError(f"expected {n_delta} nodal samples, got {f.size}")
    first = np.diff(f, prepend=0.0)
    w = np.diff(first, prepend=0.0)
    return FullTwoLayerSolution(n_delta, w, interval)


def combine_two_layer(coeffs, solutions: Sequence[FullTwoLayerSolution]) -> FullTwoLayerSolution:
    """``sum_m coeffs[m] * solutions[m]`` on a shared grid."""
    ref = solutions[0]
    for s in solutions[1:]:
        if s.n_delta != ref.n_delta or s.interval != ref.interval:
            raise NetworkStructureError("two-layer solutions live on different grids")
    w = np.asarray(coeffs, dtype=float) @ np.stack([s.outer_weights for s in solutions])
    return FullTwoLayerSolution(ref.n_delta, w, ref.interval)


def _trapezoid_nodes(lo: float, hi: float, n: int, nudge: bool):
    if nudge:
        # keep nodes strictly inside pieces delimited by discontinuities
        eps = 1e-12 * max(hi - lo, 1e-300)
        lo, hi = lo + eps, hi - eps
    x = np.linspace(lo, hi, n)
    w = np.full(n, (hi - lo) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def grid_norm(f: Callable, g: Callable, domain=(0.0, 1.0), kind: str = "l2",
              n_quad: int = 2 ** 14, breakpoints=None) -> float:
    """``||f - g||`` on ``domain`` by composite trapezoid (``l2``) or node max (``sup``).

    ``breakpoints`` split the domain into pieces integrated separately, which
    keeps jump discontinuities off the quadrature nodes.
    """
    if n_quad < 2:
        raise ValueError("n_quad must be >= 2")
    a, b = map(float, domain)
    if breakpoints is None:
        pieces = [(a, b, n_quad, False)]
    else:
        cuts = sorted({a, b, *(float(p) for p in breakpoints if a < p < b)})
        pieces = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            n = max(3, int(round(n_quad * (hi - lo) / (b - a))))
            pieces.append((lo, hi, n, True))
    total = 0.0
    worst = 0.0
    for lo, hi, n, nudge in pieces:
        x, w = _trapezoid_nodes(lo, hi, n, nudge)
        d = np.asarray(f(x), dtype=float) - np.asarray(g(x), dtype=float)
        if kind == "sup":
            worst = max(worst, float(np.max(np.abs(d))))
        elif kind == "l2":
            total += float(np.dot(w, d * d))
        else:
            raise ValueError(f"unknown norm kind {kind!r}")
    return worst if kind == "sup" else float(np.sqrt(total))
