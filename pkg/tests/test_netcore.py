import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdnlab.netcore import (ActivationKind, AffineLayer, DeepNetwork, NetworkStructureError,
                            affine_network, build_full_two_layer, combine_two_layer,
                            compose_networks, eval_network, grid_norm)


def hinge(shift):
    return DeepNetwork.from_arrays([[[1.0]], [[1.0]]], [[-shift], [0.0]], [["relu"]])


def test_single_layer_identity():
    net = DeepNetwork.from_arrays([[[1.0]]], [[0.0]])
    assert eval_network(net, 0.7) == pytest.approx(0.7, abs=1e-15)


def test_relu_hinge_values():
    net = hinge(0.5)
    assert eval_network(net, 0.25) == pytest.approx(0.0, abs=1e-15)
    assert eval_network(net, 0.75) == pytest.approx(0.25, abs=1e-15)


def test_threshold_is_strict_at_zero():
    net = DeepNetwork.from_arrays([[[1.0]], [[1.0]]], [[0.0], [0.0]], [["threshold"]])
    assert eval_network(net, np.array([-1e-300, 0.0, 1e-300])).tolist() == [0.0, 0.0, 1.0]


def test_width_mismatch_rejected():
    with pytest.raises(NetworkStructureError):
        DeepNetwork.from_arrays([np.ones((2, 1)), np.ones((1, 3))], [np.zeros(2), [0.0]], [["relu"] * 2])


def test_two_layer_identity_interpolant():
    sol = build_full_two_layer(5, np.linspace(0.0, 1.0, 5))
    assert sol(0.3) == pytest.approx(0.3, abs=1e-12)
    assert eval_network(sol.network, 0.3) == pytest.approx(0.3, abs=1e-12)


def test_zero_and_constant_samples():
    z = build_full_two_layer(5, np.zeros(5))
    assert np.all(z(np.linspace(-1, 2, 50)) == 0.0)
    c = build_full_two_layer(4, np.ones(4))
    assert np.allclose(c(c.grid), 1.0, atol=1e-12)
    assert np.allclose(eval_network(c.network, c.grid), 1.0, atol=1e-12)


def test_hinge_interpolant_within_dx():
    x = np.linspace(0.0, 1.0, 101)
    sol = build_full_two_layer(101, np.maximum(x - 0.5, 0.0))
    dense = np.linspace(0.0, 1.0, 20001)
    assert np.max(np.abs(sol(dense) - np.maximum(dense - 0.5, 0.0))) <= sol.dx


def test_fast_evaluator_matches_network():
    rng = np.random.default_rng(4)
    sol = build_full_two_layer(33, rng.normal(size=33), (-1.0, 2.0))
    x = rng.uniform(-2.0, 3.0, 500)
    assert np.max(np.abs(sol(x) - eval_network(sol.network, x))) < 1e-11


def test_combine_two_layer_is_linear():
    rng = np.random.default_rng(5)
    a, b = (build_full_two_layer(17, rng.normal(size=17)) for _ in range(2))
    c = combine_two_layer([2.0, -0.5], [a, b])
    x = np.linspace(0, 1, 77)
    assert np.allclose(c(x), 2.0 * a(x) - 0.5 * b(x), atol=1e-12)


def test_grid_norm_examples():
    f = lambda x: np.sin(3 * np.asarray(x))
    assert grid_norm(f, f, (0, 1), "l2") == 0.0
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    assert grid_norm(one, zero, (0, 1), "l2", 2 ** 10) == pytest.approx(1.0, abs=1e-10)
    ind = lambda x: (np.asarray(x) <= 0.25).astype(float)
    assert abs(grid_norm(ind, zero, (0, 1), "l2", 2 ** 10) - 0.5) <= 2 / 2 ** 10
    assert grid_norm(ind, zero, (0, 1), "sup") == 1.0


def test_compose_examples():
    ident = affine_network(1.0)
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 2, 100)
    h = hinge(0.3)
    assert np.allclose(eval_network(compose_networks(ident, h), x), eval_network(h, x), atol=1e-15)
    two_x = affine_network(2.0)
    plus_one = affine_network(1.0, 1.0)
    assert eval_network(compose_networks(two_x, plus_one), 1.0) == pytest.approx(4.0)
    x = np.linspace(-1, 2, 1000)
    hh = compose_networks(hinge(0.2), hinge(0.5))
    direct = eval_network(hinge(0.2), eval_network(hinge(0.5), x))
    assert np.max(np.abs(eval_network(hh, x) - direct)) < 1e-12


def test_activation_parse():
    assert ActivationKind.parse("relu") is ActivationKind.RELU
    assert ActivationKind.parse(1) is ActivationKind.THRESHOLD
    with pytest.raises(ValueError):
        ActivationKind.parse("tanh")


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=40), st.floats(-3, 3))
def test_round_trip_at_nodes(samples, alpha):
    sol = build_full_two_layer(len(samples), samples)
    assert np.allclose(sol(sol.grid), samples, atol=1e-12)
    # final-layer scaling scales the output
    last = sol.network.layers[-1]
    scaled = DeepNetwork(sol.network.layers[:-1] + (AffineLayer(alpha * last.weights, alpha * last.biases),))
    assert np.allclose(eval_network(scaled, sol.grid), alpha * sol(sol.grid), atol=1e-10)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=40))
def test_lipschitz_continuity(samples):
    sol = build_full_two_layer(len(samples), samples)
    C = np.max(np.abs(np.diff(samples))) / sol.dx if len(samples) > 1 else 0.0
    x = np.linspace(0, 1, 513)
    h = 0.5 * sol.dx
    assert np.all(np.abs(sol(x + h) - sol(x)) <= C * h + 1e-9)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=8))
def test_threshold_nets_piecewise_constant(biases):
    n = len(biases)
    net = DeepNetwork.from_arrays([np.ones((n, 1)), np.ones((1, n))], [np.array(biases), [0.0]],
                                  [["threshold"] * n])
    x = np.linspace(-3, 3, 2001)
    x = x[np.min(np.abs(x[:, None] + np.array(biases)[None, :]), axis=1) > 1e-3]
    h = 1e-4
    assert np.all(eval_network(net, x + h) == eval_network(net, x))
