"""Classical and deep model reduction.

* ``svd``: one-sided (Hestenes) Jacobi SVD with a QR preconditioner.
* ``pod_project``: POD basis and worst-case projection error of a snapshot set.
* ``deep_reduce``: shared low-rank factors ``W_li ~ U_l G_li V_l^T`` for a
  family of networks with identical architecture, giving reduced deep
  networks whose per-member data are only the small cores ``G_li``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .netcore import (AffineLayer, DeepNetwork, FullTwoLayerSolution,
                      NetworkStructureError, _activate)

__all__ = [
    "ConvergenceError",
    "PODBasis",
    "ReducedDeepNetwork",
    "ReducedTwoLayerSolution",
    "SharedFactors",
    "SnapshotMatrix",
    "deep_reduce",
    "dof_count",
    "eval_rdn",
    "pod_errors",
    "pod_project",
    "read_snapshots_csv",
    "reduce_two_layer",
    "svd",
    "write_snapshots_csv",
]

JACOBI_TOL = 1e-12
MAX_SWEEPS = 60


class ConvergenceError(ArithmeticError):
    """Jacobi sweeps did not converge; ``residual`` is the last off-diagonal ratio."""

    def __init__(self, msg, residual):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------------------
# SVD

def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of ``n`` (even) columns into ``n - 1`` rounds of disjoint pairs."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        rounds.append((lo, hi))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_rows(r: np.ndarray):
    """Orthogonalise the rows of square ``r`` by plane rotations.

    Returns ``(b, w)`` with ``b = w r`` for orthogonal ``w`` and mutually
    orthogonal rows of ``b``.  Rows are stored contiguously, so gathering a
    round of disjoint pairs is cheap.
    """
    n = r.shape[0]
    pad = n % 2
    b = np.vstack([r, np.zeros((pad, r.shape[1]))]) if pad else r.copy()
    nn = b.shape[0]
    w = np.eye(nn)
    fro2 = float(np.sum(b * b))
    if fro2 == 0.0 or nn < 2:
        return b[:n], w[:n, :n]
    tiny = (np.finfo(float).eps ** 2) * fro2
    rounds = _round_robin(nn)
    off = np.inf
    for _ in range(MAX_SWEEPS):
        off = 0.0
        for p, q in rounds:
            bp, bq = b[p], b[q]
            alpha = np.einsum("ij,ij->i", bp, bp)
            beta = np.einsum("ij,ij->i", bq, bq)
            gamma = np.einsum("ij,ij->i", bp, bq)
            scale = np.sqrt(alpha * beta)
            live = scale > tiny
            ratio = np.zeros_like(gamma)
            ratio[live] = np.abs(gamma[live]) / scale[live]
            off = max(off, float(ratio.max(initial=0.0)))
            rot = live & (ratio > JACOBI_TOL)
            if not rot.any():
                continue
            p, q = p[rot], q[rot]
            al, be, ga = alpha[rot], beta[rot], gamma[rot]
            zeta = (be - al) / (2.0 * ga)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
            s = c * t[:, None]
            bp, bq = b[p], b[q]
            b[p] = c * bp - s * bq
            b[q] = s * bp + c * bq
            wp, wq = w[p], w[q]
            w[p] = c * wp - s * wq
            w[q] = s * wp + c * wq
        if off <= JACOBI_TOL:
            return b[:n, :], w[:n, :n]
    raise ConvergenceError(f"one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps", off)


def svd(matrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``A = U diag(S) Vt`` by one-sided Jacobi.

    ``A P = Q R`` (column-pivoted QR) first; Jacobi then orthogonalises the
    rows of ``R``, which are graded by the pivoting and converge in a few
    sweeps.  Singular values are non-increasing; each left singular vector
    has its largest-magnitude entry positive.  Right vectors belonging to
    zero singular values complete ``Vt`` to an orthonormal set.
    """
    a = np.array(matrix, dtype=float, ndmin=2)
    if not np.all(np.isfinite(a)):
        raise ValueError("svd input has non-finite entries")
    m, n = a.shape
    if m < n:
        u, s, vt = svd(a.T)
        return _fix_signs(vt.T, s, u.T)
    q, r, piv = scipy.linalg.qr(a, mode="economic", pivoting=True)
    b, w = _jacobi_rows(r)
    # b = w r  =>  r = w^T b = w^T diag(s) y^T with unit rows y^T of b
    s = np.sqrt(np.einsum("ij,ij->i", b, b))
    order = np.argsort(-s, kind="stable")
    s, b, w = s[order], b[order], w[order]
    cut = np.finfo(float).eps * max(m, n) * (s[0] if s.size else 0.0)
    nz = s > cut
    k = int(nz.sum())
    y = np.zeros((n, n))
    y[:k] = b[:k] / s[:k, None]
    if k < n:
        s = np.where(nz, s, 0.0)
        full, _ = np.linalg.qr(np.vstack([y[:k], np.eye(n)]).T)
        y[k:] = full[:, k:n].T
    u = q @ w.T
    vt = np.empty_like(y)
    vt[:, piv] = y
    return _fix_signs(u, s, vt)


def _fix_signs(u, s, vt):
    idx = np.argmax(np.abs(u), axis=0)
    flip = u[idx, np.arange(u.shape[1])] < 0
    u = u.copy()
    vt = vt.copy()
    u[:, flip] *= -1.0
    vt[flip, :] *= -1.0
    return u, s, vt


# ---------------------------------------------------------------------------
# POD

@dataclass(frozen=True)
class SnapshotMatrix:
    """Columns are grid samples of solutions; ``params[j] = (t, mu)``.

    Norms use the uniform weight ``dx = 1/(n_delta - 1)``, i.e. the grid is
    measured after affine rescaling to the unit interval.
    """

    values: np.ndarray
    params: tuple
    grid: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=2)
        g = np.array(self.grid, dtype=float).reshape(-1)
        params = tuple((float(t), tuple(float(m) for m in mu)) for t, mu in self.params)
        if v.shape[0] != g.size:
            raise ValueError(f"{v.shape[0]} rows but grid has {g.size} points")
        if v.shape[1] != len(params):
            raise ValueError(f"{v.shape[1]} columns but {len(params)} parameter records")
        bad = np.argwhere(~np.isfinite(v))
        if bad.size:
            i, j = bad[0]
            t, mu = params[j]
            raise ValueError(f"non-finite sample at x={g[i]!r}, t={t!r}, mu={mu!r}")
        v.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "params", params)

    @property
    def n_delta(self) -> int:
        return self.values.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.values.shape[1]

    @property
    def dx(self) -> float:
        return 1.0 / (self.n_delta - 1)


@dataclass(frozen=True)
class PODBasis:
    basis: np.ndarray
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def project(self, vectors: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ vectors)


def _check_rank(snapshots: SnapshotMatrix, m: int):
    top = min(snapshots.n_delta, snapshots.n_snapshots)
    if not 1 <= m <= top:
        raise ValueError(f"rank m={m} outside [1, {top}]")


def pod_errors(snapshots: SnapshotMatrix, ms: Sequence[int]):
    """Worst-case projection errors for several ranks from a single SVD."""
    for m in ms:
        _check_rank(snapshots, m)
    a = snapshots.values
    u, s, _ = svd(a)
    scale = math.sqrt(snapshots.dx)
    errs = []
    for m in ms:
        v = u[:, :m]
        r = a - v @ (v.T @ a)
        errs.append(scale * float(np.sqrt(np.max(np.einsum("ij,ij->j", r, r)))))
    return (u, s), np.array(errs)


def pod_project(snapshots: SnapshotMatrix, m: int) -> tuple[PODBasis, float]:
    """Leading ``m`` left singular vectors and ``max_j ||u_j - V V^T u_j||``."""
    _check_rank(snapshots, m)
    (u, s), errs = pod_errors(snapshots, [m])
    return PODBasis(u[:, :m], s), float(errs[0])


@dataclass(frozen=True)
class ReducedTwoLayerSolution:
    """``sum_m gamma_m xi_m`` where ``xi_m`` has outer weights ``basis[:, m]``."""

    gamma: np.ndarray
    basis_ref: PODBasis
    n_delta: int
    interval: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.basis_ref.rank > self.n_delta:
            raise ValueError("reduced dimension exceeds the grid size")

    def full(self) -> FullTwoLayerSolution:
        return FullTwoLayerSolution(self.n_delta, self.basis_ref.basis @ self.gamma,
                                    self.interval)

    def __call__(self, x):
        return self.full()(x)


def reduce_two_layer(solutions: Sequence[FullTwoLayerSolution], m: int):
    """POD of the outer-weight vectors of a family of full 2-layer solutions."""
    ref = solutions[0]
    snap = SnapshotMatrix(np.stack([s.outer_weights for s in solutions], axis=1),
                          [(float(i), ()) for i in range(len(solutions))], ref.grid)
    basis, err = pod_project(snap, m)
    members = [ReducedTwoLayerSolution(basis.basis.T @ s.outer_weights, basis,
                                       ref.n_delta, ref.interval) for s in solutions]
    return basis, members, err


# ---------------------------------------------------------------------------
# Deep reduction

@dataclass(frozen=True)
class SharedFactors:
    """Shared factors of a reduced family: ``W_l ~ U[l] G_l V[l]^T``.

    ``activations[l]`` applies between layer ``l`` and ``l + 1``; together
    with ``U[l]`` and ``V[l + 1]`` it forms the reduced activation
    ``y -> V[l+1]^T rho(U[l] y)``.
    """

    U: tuple
    V: tuple
    activations: tuple

    def __post_init__(self):
        if not (len(self.U) == len(self.V) == len(self.activations) + 1):
            raise NetworkStructureError("need L column factors, L row factors, L-1 activations")
        for l, (u, v) in enumerate(zip(self.U, self.V)):
            if l + 1 < len(self.U) and u.shape[0] != self.V[l + 1].shape[0]:
                raise NetworkStructureError(f"factor widths disagree after layer {l + 1}")

    @property
    def depth(self) -> int:
        return len(self.U)


@dataclass(frozen=True)
class ReducedDeepNetwork:
    """One member of a reduced family: cores ``gammas`` and bias coordinates."""

    factors: SharedFactors
    gammas: tuple
    offsets: tuple

    def __post_init__(self):
        f = self.factors
        if len(self.gammas) != f.depth or len(self.offsets) != f.depth:
            raise NetworkStructureError("one core and one offset per layer")
        for l, (g, c) in enumerate(zip(self.gammas, self.offsets)):
            if g.shape != (f.U[l].shape[1], f.V[l].shape[1]) or c.shape != (g.shape[0],):
                raise NetworkStructureError(f"core {l + 1} has shape {g.shape}")

    @property
    def dims(self) -> tuple[int, ...]:
        f = self.factors
        return tuple(v.shape[1] for v in f.V) + (f.U[-1].shape[1],)

    @property
    def reduced_weights(self):
        return self.gammas

    def to_network(self) -> DeepNetwork:
        """Expanded network with weights ``U G V^T`` and biases ``U c``."""
        f = self.factors
        layers = []
        for l, (g, c) in enumerate(zip(self.gammas, self.offsets)):
            w = f.U[l] @ g @ f.V[l].T
            acts = f.activations[l] if l < len(f.activations) else None
            layers.append(AffineLayer(w, f.U[l] @ c, acts))
        return DeepNetwork(tuple(layers))

    def __call__(self, x):
        return eval_rdn(self, x)


def eval_rdn(rdn: ReducedDeepNetwork, x):
    """Evaluate a reduced deep network through its reduced activations."""
    f = rdn.factors
    x = np.asarray(x, dtype=float)
    scalar_in = x.ndim < 2
    z = x.reshape(1, -1) if scalar_in else x
    if z.shape[0] != f.V[0].shape[0]:
        raise NetworkStructureError(
            f"input width {z.shape[0]} != reduced network input width {f.V[0].shape[0]}")
    y = f.V[0].T @ z
    last = f.depth - 1
    for l in range(last):
        h = rdn.gammas[l] @ y + rdn.offsets[l][:, None]
        y = f.V[l + 1].T @ _activate(f.U[l] @ h, f.activations[l])
    out = f.U[last] @ (rdn.gammas[last] @ y + rdn.offsets[last][:, None])
    if scalar_in and out.shape[0] == 1:
        return out.reshape(x.shape)
    return out


def _leading_basis(a: np.ndarray, r: int) -> np.ndarray:
    """First ``r`` left singular vectors, completed orthonormally past the data rank."""
    u, _, _ = svd(a)
    u = u[:, :r]
    if u.shape[1] < r:
        u = np.hstack([u, scipy.linalg.null_space(u.T)[:, :r - u.shape[1]]])
    return u


def deep_reduce(family: Sequence[DeepNetwork], ranks: Sequence[int],
                lift_ranks: Sequence[int] | None = None):
    """Shared factors and per-member cores for a family of same-shape networks.

    ``ranks[l]`` is the reduced width entering layer ``l + 1`` (the rank of
    ``V[l]``) and ``ranks[L]`` the rank of the output factor.  By default the
    column factor ``U[l]`` of a hidden layer has the same rank as
    ``V[l + 1]``; ``lift_ranks[l]`` overrides it for hidden layer ``l + 1``,
    which keeps layers with a fixed low-rank weight exact.
    """
    if not family:
        raise ValueError("empty family")
    ref = family[0]
    L = ref.depth
    for net in family[1:]:
        if net.dims != ref.dims:
            raise NetworkStructureError(f"member dims {net.dims} != {ref.dims}")
        for a, b in zip(net.layers[:-1], ref.layers[:-1]):
            if not np.array_equal(a.activations, b.activations):
                raise NetworkStructureError("members use different activations")
    ranks = [int(r) for r in ranks]
    if len(ranks) != L + 1:
        raise NetworkStructureError(f"need {L + 1} ranks, got {len(ranks)}")
    col_ranks = list(ranks[1:])
    if lift_ranks is not None:
        if len(lift_ranks) != L - 1:
            raise NetworkStructureError(f"need {L - 1} lift ranks")
        col_ranks[:L - 1] = [int(r) for r in lift_ranks]
    dims = ref.dims
    Us, Vs = [], []
    for l in range(L):
        n_out, n_in = dims[l + 1], dims[l]
        if not 1 <= col_ranks[l] <= n_out or not 1 <= ranks[l] <= n_in:
            raise ValueError(f"rank out of range at layer {l + 1}")
        ws = [net.layers[l].weights for net in family]
        bs = [net.layers[l].biases[:, None] for net in family]
        Us.append(_leading_basis(np.hstack(ws + bs), col_ranks[l]))
        Vs.append(_leading_basis(np.hstack([w.T for w in ws]), ranks[l]))
    factors = SharedFactors(tuple(Us), tuple(Vs),
                            tuple(l.activations for l in ref.layers[:-1]))
    members = []
    for net in family:
        gammas = tuple(Us[l].T @ net.layers[l].weights @ Vs[l] for l in range(L))
        offsets = tuple(Us[l].T @ net.layers[l].biases for l in range(L))
        members.append(ReducedDeepNetwork(factors, gammas, offsets))
    return factors, members


def dof_count(rdn: ReducedDeepNetwork, shared: int = 0) -> int:
    """Entries of the varying cores, ``sum_l M_l M_{l+1}``, less ``shared`` ones."""
    total = sum(int(g.size) for g in rdn.gammas)
    if shared < 0 or shared > total:
        raise ValueError(f"shared={shared} outside [0, {total}]")
    return total - shared


# ---------------------------------------------------------------------------
# CSV

def _label(t, mu) -> str:
    return f"t={t!r};mu=" + "|".join(repr(float(m)) for m in mu)


def _parse_label(label: str):
    head, _, tail = label.partition(";")
    t = float(head.split("=", 1)[1])
    mu_txt = tail.split("=", 1)[1]
    mu = tuple(float(m) for m in mu_txt.split("|")) if mu_txt else ()
    return t, mu


def write_snapshots_csv(snapshots: SnapshotMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + [_label(t, mu) for t, mu in snapshots.params])
        for x, row in zip(snapshots.grid, snapshots.values):
            w.writerow([repr(float(x))] + [repr(float(v)) for v in row])


def read_snapshots_csv(path) -> SnapshotMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    if header[0] != "x":
        raise ValueError("snapshot CSV must start with an x column")
    params = [_parse_label(h) for h in header[1:]]
    return SnapshotMatrix(body[:, 1:], params, body[:, 0])
