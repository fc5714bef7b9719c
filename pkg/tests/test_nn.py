import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gan_rebalance.cli import gradcheck_suite, random_small_net
from gan_rebalance.errors import ContractError, ShapeError, TrainingError
from gan_rebalance.nn import (ACTIVATIONS, Gradients, Layer, MlpNetwork, build_mlp,
                              grad_check, loss_and_grad, mlp_backward, mlp_forward, sgd_step)
from gan_rebalance.rng import Rng


def naive_forward(net, x):
    """Scalar-loop reference forward pass."""
    out = [list(map(float, row)) for row in x]
    for layer in net.layers:
        nxt = []
        for row in out:
            vals = []
            for j in range(layer.fan_out):
                z = float(layer.bias[j])
                for i in range(layer.fan_in):
                    z += row[i] * float(layer.weight[i, j])
                if layer.activation == "leaky_relu":
                    z = z if z > 0 else 0.01 * z
                elif layer.activation == "tanh":
                    z = math.tanh(z)
                elif layer.activation == "sigmoid":
                    z = 1.0 / (1.0 + math.exp(-z))
                vals.append(z)
            nxt.append(vals)
        out = nxt
    return np.array(out)


def test_identity_network_is_identity():
    net = MlpNetwork([Layer(np.eye(3), np.zeros(3), "identity")])
    x = Rng(1).normal(15).reshape(5, 3)
    out, _ = mlp_forward(net, x)
    assert np.array_equal(out, x)


def test_zero_sigmoid_layer_outputs_half():
    net = MlpNetwork([Layer(np.zeros((4, 2)), np.zeros(2), "sigmoid")])
    out, _ = mlp_forward(net, Rng(2).normal(12).reshape(3, 4))
    assert np.all(out == 0.5)


def test_forward_matches_naive_loop():
    rng = Rng(3)
    net = build_mlp([4, 5, 2], "tanh", "sigmoid", rng)
    net.layers[0].bias[:] = rng.normal(5)
    x = rng.normal(24).reshape(6, 4)
    out, cache = mlp_forward(net, x)
    np.testing.assert_allclose(out, naive_forward(net, x), rtol=0, atol=1e-12)
    assert len(cache.pre) == len(cache.post) == 2


def test_forward_shape_error_names_dims():
    net = build_mlp([4, 2], "tanh", "identity", Rng(0))
    with pytest.raises(ShapeError, match="3 columns.*input dim 4"):
        mlp_forward(net, np.zeros((2, 3)))


def test_layers_must_chain():
    with pytest.raises(ShapeError):
        MlpNetwork([Layer(np.zeros((2, 3)), np.zeros(3), "tanh"),
                    Layer(np.zeros((4, 1)), np.zeros(1), "identity")])


def test_zero_output_grad_gives_zero_gradients():
    net = build_mlp([3, 4, 2], "leaky_relu", "identity", Rng(4))
    out, cache = mlp_forward(net, Rng(5).normal(9).reshape(3, 3))
    g = mlp_backward(net, cache, np.zeros_like(out))
    assert all(not np.any(a) for a in g.flat())


def test_scalar_identity_chain_rule():
    net = MlpNetwork([Layer(np.array([[0.7]]), np.zeros(1), "identity")])
    x = np.array([[2.5]])
    _, cache = mlp_forward(net, x)
    g = mlp_backward(net, cache, np.ones((1, 1)))
    assert g.weights[0][0, 0] == 2.5
    assert g.biases[0][0] == 1.0


def test_backward_rejects_stale_cache():
    net = build_mlp([2, 2], "tanh", "identity", Rng(0))
    out, cache = mlp_forward(net, np.ones((1, 2)))
    g = mlp_backward(net, cache, np.ones_like(out))
    sgd_step(net, g, 0.1)
    with pytest.raises(ContractError):
        mlp_backward(net, cache, np.ones_like(out))
    with pytest.raises(ContractError):
        mlp_backward(net, None, np.ones_like(out))


def test_random_three_layer_net_matches_finite_differences():
    rng = Rng(11)
    net = build_mlp([5, 7, 6, 3], "tanh", "identity", rng)
    x = rng.normal(20).reshape(4, 5)
    assert grad_check(net, x, "squared", rng.normal(12).reshape(4, 3)) < 1e-4


def test_sgd_formula_and_zero_gradient():
    net = MlpNetwork([Layer(np.array([[1.0]]), np.array([0.0]), "identity")])
    before = net.copy()
    zero = Gradients([np.zeros((1, 1))], [np.zeros(1)], np.zeros((1, 1)))
    sgd_step(net, zero, 123.0)
    assert net.layers[0].weight[0, 0] == before.layers[0].weight[0, 0]
    sgd_step(net, Gradients([np.array([[2.0]])], [np.zeros(1)], None), 0.1)
    assert net.layers[0].weight[0, 0] == pytest.approx(0.8, abs=1e-15)


def test_sgd_local_descent():
    rng = Rng(12)
    net = build_mlp([4, 8, 1], "leaky_relu", "sigmoid", rng)
    x = rng.normal(40).reshape(10, 4)
    y = (np.arange(10) % 2).reshape(10, 1).astype(float)
    before, g = loss_and_grad(net, x, "bce", y)
    sgd_step(net, g, 1e-4)
    after, _ = loss_and_grad(net, x, "bce", y)
    assert after <= before + 1e-9


def test_sgd_non_finite_gradient_names_layer_and_leaves_net_untouched():
    net = build_mlp([2, 3, 1], "tanh", "identity", Rng(0))
    snapshot = net.copy()
    bad = Gradients([np.zeros((2, 3)), np.full((3, 1), np.nan)],
                    [np.zeros(3), np.zeros(1)], None)
    with pytest.raises(TrainingError) as info:
        sgd_step(net, bad, 0.1)
    assert info.value.where == {"layer": 1}
    assert all(np.array_equal(a, b) for a, b in zip(net.parameters(), snapshot.parameters()))


def test_grad_check_linear_squared():
    rng = Rng(13)
    net = build_mlp([3, 2], "identity", "identity", rng)
    x = rng.normal(12).reshape(4, 3)
    assert grad_check(net, x, "squared", rng.normal(8).reshape(4, 2)) < 1e-7


def test_grad_check_detects_corruption():
    rng = Rng(14)
    net = build_mlp([3, 4, 2], "tanh", "identity", rng)
    x = rng.normal(12).reshape(4, 3)
    t = rng.normal(8).reshape(4, 2)
    _, g = loss_and_grad(net, x, "squared", t)
    g.weights[0] = g.weights[0] * 2.0
    assert grad_check(net, x, "squared", t, grads=g) > 0.1


def test_fifty_random_nets_pass_grad_check():
    mlp_err, gen_err = gradcheck_suite(50, seed=0)
    assert mlp_err < 1e-4
    assert gen_err < 1e-4


@given(st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_random_nets_grad_check_property(seed):
    rng = Rng(seed)
    net = random_small_net(rng)
    x = rng.normal(3 * net.input_dim).reshape(3, net.input_dim)
    t = rng.normal(3 * net.output_dim).reshape(3, net.output_dim)
    assert grad_check(net, x, "squared", t) < 1e-4


@pytest.mark.parametrize("act", ACTIVATIONS)
def test_forward_finite_for_extreme_inputs(act):
    net = MlpNetwork([Layer(np.full((2, 2), 50.0), np.zeros(2), act)])
    out, _ = mlp_forward(net, np.array([[1e3, 1e3], [-1e3, -1e3]]))
    assert np.all(np.isfinite(out))
    if act == "sigmoid":
        assert np.all((out >= 0) & (out <= 1))


def test_glorot_bounds_and_zero_bias():
    net = build_mlp([10, 6], "tanh", "identity", Rng(0))
    limit = math.sqrt(6.0 / 16)
    assert np.all(np.abs(net.layers[0].weight) <= limit)
    assert not np.any(net.layers[0].bias)


def test_forward_deterministic():
    a = build_mlp([3, 5, 2], "leaky_relu", "identity", Rng(8))
    b = build_mlp([3, 5, 2], "leaky_relu", "identity", Rng(8))
    x = Rng(9).normal(6).reshape(2, 3)
    assert np.array_equal(mlp_forward(a, x)[0], mlp_forward(b, x)[0])
