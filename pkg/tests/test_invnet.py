import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import scalar_bisection
from rdnlab.invnet import (MATSComposition, MonotonicityError, build_bisection_step, build_inverse,
                           check_monotone, eval_mats)
from rdnlab.netcore import DeepNetwork, affine_network, build_full_two_layer, eval_network

IDENT = check_monotone(affine_network(1.0))


def pl_monotone(rng, n=9):
    vals = np.concatenate([[0.0], np.cumsum(rng.uniform(0.01, 1.0, n - 1))])
    sol = build_full_two_layer(n, vals)
    return check_monotone(sol.network)


def run_step(f, a, b, x):
    net = DeepNetwork(build_bisection_step(f))
    out = eval_network(net, np.array([[a], [b], [x]], dtype=float))
    return out[:, 0]


def test_check_monotone_examples():
    assert check_monotone(affine_network(1.0)).monotone_certificate == pytest.approx(1.0)
    with pytest.raises(MonotonicityError) as err:
        check_monotone(affine_network(-1.0))
    x0, x1, f0, f1 = err.value.witness
    assert x0 < x1 and f0 > f1
    flat = build_full_two_layer(5, [0.0, 0.3, 0.3, 0.3, 1.0])
    assert check_monotone(flat.network).monotone_certificate == pytest.approx(0.0, abs=1e-12)


def test_single_step_hand_simulated():
    assert np.allclose(run_step(IDENT, 0, 1, 0.7), [0.5, 1.0, 0.7], atol=1e-15)
    assert np.allclose(run_step(IDENT, 0, 1, 0.25), [0.0, 0.5, 0.25], atol=1e-15)


@given(st.integers(0, 2 ** 31), st.floats(0.0, 1.0))
def test_step_halves_interval(seed, u):
    rng = np.random.default_rng(seed)
    f = pl_monotone(rng)
    lo, hi = f.image
    a, b, _ = run_step(f, 0.0, 1.0, lo + u * (hi - lo))
    assert b - a == pytest.approx(0.5, abs=1e-15)
    a2, b2, _ = run_step(f, a, b, lo + u * (hi - lo))
    assert b2 - a2 == pytest.approx(0.25, abs=1e-15)


def test_inverse_examples():
    inv = build_inverse(IDENT, 3)
    assert abs(eval_network(inv.net, 0.5) - 0.5) <= 0.125
    x = np.linspace(0.0, 1.0, 65)
    sq = check_monotone(build_full_two_layer(65, x ** 2).network)
    inv = build_inverse(sq, 20)
    ref = scalar_bisection(lambda v: float(eval_network(sq.net, v)), 0.25, 0.0, 1.0, 60)
    assert abs(inv(0.25) - ref) <= 2.0 ** -20
    assert abs(inv(0.25) - 0.5) <= 2.0 ** -20
    step = check_monotone(DeepNetwork.from_arrays([[[1.0]], [[1.0]]], [[-0.37], [0.0]], [["threshold"]]))
    for L in (6, 12, 18):
        inv = build_inverse(step, L)
        assert abs(float(eval_network(inv.net, 0.5)) - 0.37) <= 2.0 ** -L


def test_layer_count_and_adapters():
    rng = np.random.default_rng(0)
    f = pl_monotone(rng)
    for L in (1, 4, 9):
        inv = build_inverse(f, L)
        assert inv.net.depth == (f.net.depth + 4) * L + 2
        assert inv.step_depth == f.net.depth + 4


def test_fast_path_matches_network():
    rng = np.random.default_rng(1)
    f = pl_monotone(rng)
    inv = build_inverse(f, 10)
    x = np.linspace(*f.image, 300)
    assert np.max(np.abs(inv(x) - eval_network(inv.net, x))) <= 1e-12


@given(st.integers(0, 2 ** 31), st.integers(1, 14))
def test_inverse_agrees_with_scalar_bisection(seed, L):
    rng = np.random.default_rng(seed)
    f = pl_monotone(rng)
    inv = build_inverse(f, L)
    y = np.linspace(*f.image, 64)
    ref = [scalar_bisection(lambda v: float(f(np.array([v]))[0]), yy, 0.0, 1.0, L) for yy in y]
    assert np.max(np.abs(eval_network(inv.net, y) - ref)) <= 1e-9


@given(st.integers(0, 2 ** 31), st.integers(1, 16))
def test_inverse_of_forward_is_near_identity(seed, L):
    rng = np.random.default_rng(seed)
    f = pl_monotone(rng)
    inv = build_inverse(f, L)
    x = np.linspace(0.0, 1.0, 257)
    assert np.max(np.abs(inv(f(x)) - x)) <= 2.0 ** -L + 1e-12


def test_plateau_returns_a_preimage():
    flat = check_monotone(build_full_two_layer(5, [0.0, 0.3, 0.3, 0.3, 1.0]).network)
    inv = build_inverse(flat, 30)
    y = float(inv(0.3))
    assert 0.25 - 1e-8 <= y <= 0.75 + 1e-8


def test_out_of_range_clamps_to_endpoints():
    inv = build_inverse(IDENT, 20)
    assert inv(-3.0) == pytest.approx(0.0, abs=2e-6)
    assert inv(5.0) == pytest.approx(1.0, abs=2e-6)


def test_mats_identity_and_shift():
    head = build_full_two_layer(201, np.sin(np.linspace(-1, 1, 201)), (-1.0, 1.0))
    m = MATSComposition(head, [IDENT], head_domain=(-1.0, 1.0))
    x = np.linspace(0, 1, 50)
    assert np.allclose(eval_mats(m, x), head(x), atol=1e-14)
    t = 0.3
    shift = check_monotone(affine_network(1.0, -t))
    m = MATSComposition(head, [shift], head_domain=(-1.0, 1.0))
    assert np.allclose(m(x), head(x - t), atol=1e-14)
    assert np.allclose(eval_network(m.to_network(), x), head(x - t), atol=1e-12)
    with pytest.raises(ValueError, match="outside"):
        MATSComposition(head, [check_monotone(affine_network(3.0))], head_domain=(-1.0, 1.0))
