"""Fully-connected networks with hand-written backpropagation.

Batches are row-major ``(n_rows, n_features)`` float64 arrays. A layer
computes ``act(x @ W + b)`` with ``W`` of shape ``(fan_in, fan_out)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ShapeError, TrainingError
from .rng import Rng

ACTIVATIONS = ("leaky_relu", "tanh", "sigmoid", "identity")
LEAKY_SLOPE = 0.01
PROB_EPS = 1e-7


def sigmoid(x):
    # split on sign so exp never overflows
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def clamp_prob(p):
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def activate(kind, z):
    if kind == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "identity":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(kind, z, a):
    """Derivative of the activation at pre-activation ``z`` (post-activation ``a``)."""
    if kind == "leaky_relu":
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str

    @property
    def fan_in(self):
        return self.weight.shape[0]

    @property
    def fan_out(self):
        return self.weight.shape[1]


@dataclass
class MlpNetwork:
    layers: list
    version: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"layer {i}: unknown activation {layer.activation!r}")
            if layer.bias.shape != (layer.fan_out,):
                raise ShapeError(
                    f"layer {i}: bias shape {layer.bias.shape} != ({layer.fan_out},)")
            if i and self.layers[i - 1].fan_out != layer.fan_in:
                raise ShapeError(
                    f"layer {i}: input dim {layer.fan_in} does not chain with "
                    f"previous output dim {self.layers[i - 1].fan_out}")

    @property
    def input_dim(self):
        return self.layers[0].fan_in

    @property
    def output_dim(self):
        return self.layers[-1].fan_out

    @property
    def n_params(self):
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def copy(self):
        return MlpNetwork([Layer(l.weight.copy(), l.bias.copy(), l.activation)
                           for l in self.layers])

    def parameters(self):
        """Flat list of parameter arrays: ``[W0, b0, W1, b1, ...]``."""
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def forward(self, batch):
        return mlp_forward(self, batch)

    def __call__(self, batch):
        return mlp_forward(self, batch)[0]


def build_mlp(sizes, hidden_activation, output_activation, rng: Rng, zero_init=False):
    """Glorot-uniform weights in ``+-sqrt(6 / (fan_in + fan_out))``, zero biases.

    ``sizes`` lists every width from input to output.
    """
    if len(sizes) < 2:
        raise ValueError("sizes must contain input and output widths")
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        if zero_init:
            w = np.zeros((fan_in, fan_out))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = (2.0 * rng.uniform(fan_in * fan_out) - 1.0).reshape(fan_in, fan_out) * limit
        act = output_activation if i == len(sizes) - 2 else hidden_activation
        layers.append(Layer(w, np.zeros(fan_out), act))
    return MlpNetwork(layers)


@dataclass
class ForwardCache:
    net: MlpNetwork
    version: int
    inputs: list        # input to each layer
    pre: list           # x @ W + b per layer
    post: list          # activation output per layer


@dataclass
class Gradients:
    weights: list
    biases: list
    input_grad: np.ndarray

    def flat(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def scaled(self, factor):
        return Gradients([w * factor for w in self.weights],
                         [b * factor for b in self.biases],
                         self.input_grad * factor)


def _as_batch(batch, dim, what="batch"):
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch.reshape(-1, dim) if dim else batch.reshape(0, 0)
    if batch.ndim != 2 or batch.shape[1] != dim:
        got = batch.shape[1] if batch.ndim == 2 else batch.shape
        raise ShapeError(f"{what} has {got} columns, network expects input dim {dim}")
    return batch


def mlp_forward(net: MlpNetwork, batch):
    """Returns ``(output, cache)``; the cache is needed by :func:`mlp_backward`."""
    x = _as_batch(batch, net.input_dim)
    inputs, pre, post = [], [], []
    for layer in net.layers:
        inputs.append(x)
        z = x @ layer.weight + layer.bias
        x = activate(layer.activation, z)
        pre.append(z)
        post.append(x)
    return x, ForwardCache(net, net.version, inputs, pre, post)


def mlp_backward(net: MlpNetwork, cache: ForwardCache, output_grad):
    """Gradients of a scalar loss given ``dL/d(output)``."""
    if cache is None or cache.net is not net or cache.version != net.version:
        raise ContractError("forward cache is missing or was produced before the "
                            "last parameter update; rerun mlp_forward")
    grad = np.asarray(output_grad, dtype=np.float64)
    if grad.shape != cache.post[-1].shape:
        raise ShapeError(f"output_grad shape {grad.shape} != output shape "
                         f"{cache.post[-1].shape}")
    n = len(net.layers)
    dws, dbs = [None] * n, [None] * n
    for i in range(n - 1, -1, -1):
        layer = net.layers[i]
        delta = grad * activation_grad(layer.activation, cache.pre[i], cache.post[i])
        dws[i] = cache.inputs[i].T @ delta
        dbs[i] = delta.sum(axis=0)
        grad = delta @ layer.weight.T
    return Gradients(dws, dbs, grad)


def sgd_step(net: MlpNetwork, grads: Gradients, lr: float):
    """In-place ``p <- p - lr * grad(p)``; returns ``net``.

    All gradients are checked before any parameter moves, so a failed step
    leaves the network untouched.
    """
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if len(grads.weights) != len(net.layers):
        raise ShapeError("gradient list does not match layer count")
    for i, (layer, dw, db) in enumerate(zip(net.layers, grads.weights, grads.biases)):
        if dw.shape != layer.weight.shape or db.shape != layer.bias.shape:
            raise ShapeError(f"layer {i}: gradient shapes {dw.shape}/{db.shape} do not "
                             f"match parameters {layer.weight.shape}/{layer.bias.shape}")
        if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
            raise TrainingError(f"non-finite gradient in layer {i}", layer=i)
    for layer, dw, db in zip(net.layers, grads.weights, grads.biases):
        layer.weight -= lr * dw
        layer.bias -= lr * db
    net.version += 1
    return net


# losses: each returns (value, d value / d output)

def squared_loss(output, target):
    diff = output - target
    return 0.5 * float(np.sum(diff * diff)) / len(output), diff / len(output)


def bce_loss(prob, target):
    """Mean binary cross-entropy on clamped probabilities."""
    p = clamp_prob(prob)
    n = len(p)
    value = -float(np.sum(target * np.log(p) + (1.0 - target) * np.log1p(-p))) / n
    grad = (-(target / p) + (1.0 - target) / (1.0 - p)) / n
    return value, grad


def loss_and_grad(net, batch, loss_kind, targets=None):
    out, cache = mlp_forward(net, batch)
    if targets is None:
        targets = default_targets(loss_kind, out.shape)
    if loss_kind == "squared":
        value, dout = squared_loss(out, targets)
    elif loss_kind == "bce":
        value, dout = bce_loss(out, targets)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    return value, mlp_backward(net, cache, dout)


def default_targets(loss_kind, shape):
    if loss_kind == "bce":
        return (np.arange(shape[0] * shape[1]) % 2).reshape(shape).astype(np.float64)
    return np.zeros(shape)


def relative_error(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / denom


def numeric_gradient(loss_fn, params, eps=1e-5):
    """Central finite differences of ``loss_fn()`` w.r.t. each array in ``params``.

    Arrays are perturbed in place and restored exactly.
    """
    out = []
    for p in params:
        g = np.zeros(p.shape)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = loss_fn()
            flat[j] = orig - eps
            down = loss_fn()
            flat[j] = orig
            gflat[j] = float((up - down) / (2 * eps))
        out.append(g)
    return out


# Finite-difference oracle. It re-implements the forward pass with plain
# numpy in extended precision so that roundoff in (up - down) stays well
# below the smallest gradients a 1e-5 step has to resolve.

_XP = np.longdouble


def _act_xp(kind, z):
    if kind == "leaky_relu":
        return np.where(z > 0, z, _XP(LEAKY_SLOPE) * z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return 1 / (1 + np.exp(-z))
    return z


def forward_xp(params, activations, x):
    """Forward pass over ``[W0, b0, W1, b1, ...]`` in extended precision."""
    h = np.asarray(x, dtype=_XP)
    for i, kind in enumerate(activations):
        h = _act_xp(kind, h @ params[2 * i] + params[2 * i + 1])
    return h


def loss_xp(out, targets, loss_kind):
    t = np.asarray(targets, dtype=_XP)
    n = len(out)
    if loss_kind == "squared":
        d = out - t
        return np.sum(d * d) / (2 * n)
    if loss_kind == "bce":
        p = np.clip(out, _XP(PROB_EPS), 1 - _XP(PROB_EPS))
        return -np.sum(t * np.log(p) + (1 - t) * np.log(1 - p)) / n
    raise ValueError(f"unknown loss kind {loss_kind!r}")


def xp_params(net: MlpNetwork):
    return [p.astype(_XP) for p in net.parameters()]


def max_relative_error(analytic, numeric):
    return max((float(np.max(relative_error(a, n))) for a, n in zip(analytic, numeric)
                if a.size), default=0.0)


def grad_check(net: MlpNetwork, batch, loss_kind="squared", targets=None, eps=1e-5,
               grads: Gradients | None = None):
    """Max relative error between backprop and central differences.

    ``grads`` overrides the analytic gradients (used to test the checker).
    """
    if net.n_params > 1000:
        raise ValueError(f"grad_check is meant for small nets, got {net.n_params} params")
    batch = _as_batch(batch, net.input_dim)
    if targets is None:
        targets = default_targets(loss_kind, (len(batch), net.output_dim))
    if grads is None:
        _, grads = loss_and_grad(net, batch, loss_kind, targets)

    params = xp_params(net)
    acts = [layer.activation for layer in net.layers]

    def loss_fn():
        return loss_xp(forward_xp(params, acts, batch), targets, loss_kind)

    numeric = numeric_gradient(loss_fn, params, eps)
    return max_relative_error(grads.flat(), numeric)
