"""Dense tanh network with exact input derivatives and parameter gradients.

The forward pass propagates two tangent directions (d/dx, d/dy) alongside the
values, so u, du/dx and du/dy come out of a single exact chain-rule sweep.
Parameter gradients of any scalar built from those outputs are obtained by
reverse-mode differentiation through the tangent-augmented computation, which
yields the exact mixed second-order terms (d/dtheta of du/dx).

Everything is float64.  Initialization uses a counter-based Philox generator
keyed by the seed, so identical seeds give bit-identical parameters on any
platform.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_VERSION = 1


@dataclass
class DenseNetwork:
    """tanh MLP; head 0 is the solution, head 1 (if present) the raw tau field."""

    layer_sizes: list
    weights: list
    biases: list
    extra_scalars: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def n_out(self):
        return self.layer_sizes[-1]

    def parameter_count(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self):
        return DenseNetwork(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            dict(self.extra_scalars),
            self.seed,
        )


@dataclass
class EvalBatch:
    """Network outputs and input derivatives at a batch of points.

    u, du_dx, du_dy have shape (n_points, n_out).
    """

    points: np.ndarray
    u: np.ndarray
    du_dx: np.ndarray
    du_dy: np.ndarray


def init_network(layer_sizes, seed):
    """Glorot-uniform weights, zero biases, deterministic in the seed."""
    if len(layer_sizes) < 2:
        raise ValueError("layer_sizes must list input and output dimensions")
    if layer_sizes[0] != 2:
        raise ValueError(f"input dimension must be 2, got {layer_sizes[0]}")
    if layer_sizes[-1] not in (1, 2):
        raise ValueError(f"output dimension must be 1 or 2, got {layer_sizes[-1]}")
    rng = np.random.Generator(np.random.Philox(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenseNetwork(list(layer_sizes), weights, biases, {}, int(seed))


def forward_fields(weights, biases, points):
    """(u, du_dx, du_dy) at ``points`` (n, 2), each (n, n_out).

    Accepts plain arrays or autodiff tensors for the parameters; constants
    (the points and tangent seeds) stay plain either way.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    a = points
    tx = np.broadcast_to(np.array([1.0, 0.0]), (n, 2))
    ty = np.broadcast_to(np.array([0.0, 1.0]), (n, 2))
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = ad.matmul(a, w) + b
        tx = ad.matmul(tx, w)
        ty = ad.matmul(ty, w)
        if i < last:
            a = ad.tanh(z)
            d = 1.0 - a * a
            tx = d * tx
            ty = d * ty
        else:
            a = z
    return a, tx, ty


def forward_with_gradients(net, points):
    """Evaluate the network and its spatial derivatives (untraced)."""
    points = np.asarray(points, dtype=np.float64)
    u, ux, uy = forward_fields(net.weights, net.biases, points)
    return EvalBatch(points, u, ux, uy)


@dataclass
class TracedParams:
    """Autodiff-wrapped copies of a network's trainable parameters."""

    weights: list
    biases: list
    scalars: dict


@dataclass
class ParamGrads:
    """Gradient arrays matching a network's parameter structure."""

    weights: list
    biases: list
    scalars: dict


def wrap_params(net):
    return TracedParams(
        [ad.Tensor(w) for w in net.weights],
        [ad.Tensor(b) for b in net.biases],
        {k: ad.Tensor(v) for k, v in net.extra_scalars.items()},
    )


def loss_gradient(net, loss_fn):
    """Exact gradient of ``loss_fn(traced_params)`` w.r.t. all parameters.

    ``loss_fn`` must build its scalar from the traced weights/biases/scalars
    (typically through forward_fields and the loss-assembly operations).
    Returns (loss_value, ParamGrads); parameters the loss never touches get
    zero gradients.
    """
    traced = wrap_params(net)
    loss = loss_fn(traced)
    if not isinstance(loss, ad.Tensor):
        loss = ad.Tensor(loss)
    if not np.isfinite(loss.value):
        raise NonFiniteLossError(float(loss.value))
    loss.backward()

    def grad_of(t):
        return t.grad if t.grad is not None else np.zeros_like(t.value)

    grads = ParamGrads(
        [grad_of(t) for t in traced.weights],
        [grad_of(t) for t in traced.biases],
        {k: grad_of(t) for k, t in traced.scalars.items()},
    )
    return float(loss.value), grads


class NonFiniteLossError(RuntimeError):
    """Loss evaluation produced NaN or infinity."""

    def __init__(self, loss_value, epoch=None, last_finite_loss=None):
        self.loss_value = loss_value
        self.epoch = epoch
        self.last_finite_loss = last_finite_loss
        msg = f"non-finite loss {loss_value}"
        if epoch is not None:
            msg += f" at epoch {epoch}"
        if last_finite_loss is not None:
            msg += f" (last finite loss {last_finite_loss})"
        super().__init__(msg)


@dataclass
class AdamState:
    """Adam moment accumulators; shapes mirror the parameter list."""

    learning_rate: float
    step: int
    m: list
    v: list
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def adam_init(params, learning_rate):
    return AdamState(
        float(learning_rate),
        0,
        [np.zeros_like(p) for p in params],
        [np.zeros_like(p) for p in params],
    )


def adam_step(state, params, grads):
    """One Adam update; returns (new_params, new_state)."""
    if len(params) != len(grads) or any(
        p.shape != g.shape for p, g in zip(params, grads)
    ):
        raise ValueError("parameter/gradient shapes do not match")
    t = state.step + 1
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        update = state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_params.append(p - update)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(
        state.learning_rate, t, new_m, new_v, state.beta1, state.beta2, state.eps
    )


def flatten_parameters(net):
    """Fixed-order list of trainable arrays: W0, b0, W1, b1, ..., scalars."""
    params = []
    for w, b in zip(net.weights, net.biases):
        params.append(w)
        params.append(b)
    for name in sorted(net.extra_scalars):
        params.append(np.asarray(net.extra_scalars[name], dtype=np.float64))
    return params


def flatten_gradients(net, grads):
    flat = []
    for gw, gb in zip(grads.weights, grads.biases):
        flat.append(gw)
        flat.append(gb)
    for name in sorted(net.extra_scalars):
        flat.append(np.asarray(grads.scalars[name], dtype=np.float64))
    return flat


def unflatten_into(net, params):
    n_layers = len(net.weights)
    for i in range(n_layers):
        net.weights[i] = params[2 * i]
        net.biases[i] = params[2 * i + 1]
    for j, name in enumerate(sorted(net.extra_scalars)):
        net.extra_scalars[name] = float(params[2 * n_layers + j])


def save_checkpoint(path, net, epoch):
    """Write a versioned .npz checkpoint (parameters, scalars, seed, epoch)."""
    payload = {
        "version": np.array(CHECKPOINT_VERSION),
        "layer_sizes": np.array(net.layer_sizes),
        "seed": np.array(net.seed),
        "epoch": np.array(epoch),
        "scalar_names": np.array(sorted(net.extra_scalars), dtype="U16"),
        "scalar_values": np.array(
            [net.extra_scalars[k] for k in sorted(net.extra_scalars)]
        ),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        payload[f"w{i}"] = w
        payload[f"b{i}"] = b
    np.savez(path, **payload)


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint; returns (net, epoch)."""
    data = np.load(path)
    if int(data["version"]) != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {int(data['version'])}")
    layer_sizes = [int(s) for s in data["layer_sizes"]]
    n_layers = len(layer_sizes) - 1
    weights = [data[f"w{i}"] for i in range(n_layers)]
    biases = [data[f"b{i}"] for i in range(n_layers)]
    scalars = {
        str(name): float(val)
        for name, val in zip(data["scalar_names"], data["scalar_values"])
    }
    net = DenseNetwork(layer_sizes, weights, biases, scalars, int(data["seed"]))
    return net, int(data["epoch"])
