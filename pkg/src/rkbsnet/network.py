"""Fully connected networks N(x, theta) with a canonical flat parameter layout.

A network of depth D maps R^s to R^t through D affine layers; the activation
is applied after every layer except the last. Parameters are exchanged between
modules as one flat vector laid out as ``W_1`` (row-major), ``b_1``, ``W_2``,
``b_2``, ..., ``W_D``, ``b_D``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


class ShapeError(ValueError):
    """Raised when arrays do not conform to a network architecture."""


class Activation(str, enum.Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"

    def __call__(self, z):
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        return _sigmoid(z)

    def derivative(self, z):
        # relu'(0) is taken to be 0
        if self is Activation.RELU:
            return (z > 0).astype(float)
        sz = _sigmoid(z)
        return sz * (1.0 - sz)


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of a network: input/output dimensions and hidden widths."""

    input_dim: int
    output_dim: int
    hidden: tuple[int, ...] = ()
    activation: Activation = Activation.RELU

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(m) for m in self.hidden))
        object.__setattr__(self, "activation", Activation(self.activation))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ShapeError("input_dim and output_dim must be positive")
        if any(m < 1 for m in self.hidden):
            raise ShapeError("hidden widths must be positive")

    @property
    def depth(self) -> int:
        return len(self.hidden) + 1

    @property
    def widths(self) -> tuple[int, ...]:
        """The widths m_0, ..., m_D with m_0 = s and m_D = t."""
        return (self.input_dim, *self.hidden, self.output_dim)

    def layer_shapes(self) -> list[tuple[int, int]]:
        w = self.widths
        return [(w[j + 1], w[j]) for j in range(self.depth)]


def param_dim(spec: NetworkSpec) -> int:
    """Length of the flat parameter vector of ``spec``."""
    return sum(rows * (cols + 1) for rows, cols in spec.layer_shapes())


@dataclass(frozen=True)
class NetworkParams:
    """Weights and biases ``[(W_1, b_1), ..., (W_D, b_D)]`` of one network."""

    layers: tuple[tuple[np.ndarray, np.ndarray], ...] = field(default=())

    def flatten(self) -> np.ndarray:
        parts = []
        for W, b in self.layers:
            parts.append(np.asarray(W, dtype=float).ravel())
            parts.append(np.asarray(b, dtype=float).ravel())
        return np.concatenate(parts) if parts else np.zeros(0)

    @classmethod
    def from_flat(cls, spec: NetworkSpec, theta) -> "NetworkParams":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.size != param_dim(spec):
            raise ShapeError(
                f"flat parameter vector has length {theta.size}, "
                f"expected {param_dim(spec)}"
            )
        layers = []
        pos = 0
        for rows, cols in spec.layer_shapes():
            W = theta[pos:pos + rows * cols].reshape(rows, cols).copy()
            pos += rows * cols
            b = theta[pos:pos + rows].copy()
            pos += rows
            layers.append((W, b))
        return cls(tuple(layers))

    def conforms(self, spec: NetworkSpec) -> bool:
        shapes = spec.layer_shapes()
        if len(shapes) != len(self.layers):
            return False
        return all(
            np.shape(W) == shape and np.shape(b) == (shape[0],)
            for (W, b), shape in zip(self.layers, shapes)
        )


ParamsLike = Union[NetworkParams, np.ndarray, Sequence[float]]


def as_params(spec: NetworkSpec, params: ParamsLike) -> NetworkParams:
    """Accept either structured parameters or a flat vector."""
    if isinstance(params, NetworkParams):
        if not params.conforms(spec):
            raise ShapeError("parameters do not conform to the network spec")
        return params
    return NetworkParams.from_flat(spec, params)


def random_params(spec: NetworkSpec, rng: np.random.Generator, scale: float = 1.0) -> NetworkParams:
    theta = rng.uniform(-scale, scale, size=param_dim(spec))
    return NetworkParams.from_flat(spec, theta)


def _check_input(spec: NetworkSpec, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise ShapeError(f"input has shape {x.shape}, expected (..., {spec.input_dim})")
    return X, single


def forward(spec: NetworkSpec, params: ParamsLike, x) -> np.ndarray:
    """Evaluate N(x, theta).

    ``x`` may be a single input of length s or an (n, s) array of inputs; the
    result has shape (t,) or (n, t) accordingly.
    """
    layers = as_params(spec, params).layers
    X, single = _check_input(spec, x)
    act = spec.activation
    h = X @ layers[0][0].T + layers[0][1]
    for W, b in layers[1:]:
        h = act(h) @ W.T + b
    return h[0] if single else h


def _forward_cache(spec, layers, X):
    """Pre-activations of every layer, needed for the backward pass."""
    act = spec.activation
    pre = [X @ layers[0][0].T + layers[0][1]]
    for W, b in layers[1:]:
        pre.append(act(pre[-1]) @ W.T + b)
    return pre


def vjp_params(spec: NetworkSpec, params: ParamsLike, x, cotangent) -> np.ndarray:
    """Vector-Jacobian product with respect to the flat parameters.

    Returns ``sum_n sum_k cotangent[n, k] * dN_k(x_n, theta) / dtheta`` in the
    canonical flat layout.
    """
    layers = as_params(spec, params).layers
    X, single = _check_input(spec, x)
    G = np.asarray(cotangent, dtype=float)
    if single:
        G = G[None, :]
    if G.shape != (X.shape[0], spec.output_dim):
        raise ShapeError("cotangent shape does not match the network output")
    act = spec.activation
    pre = _forward_cache(spec, layers, X)
    grads = [None] * len(layers)
    delta = G
    for j in range(len(layers) - 1, -1, -1):
        inp = X if j == 0 else act(pre[j - 1])
        grads[j] = (delta.T @ inp, delta.sum(axis=0))
        if j > 0:
            delta = (delta @ layers[j][0]) * act.derivative(pre[j - 1])
    return NetworkParams(tuple(grads)).flatten()


def grad_params(spec: NetworkSpec, params: ParamsLike, x, k: int) -> np.ndarray:
    """Gradient of the k-th output component at a single input ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("grad_params takes a single input vector")
    if not 0 <= k < spec.output_dim:
        raise ShapeError(f"output index {k} out of range for t={spec.output_dim}")
    e = np.zeros(spec.output_dim)
    e[k] = 1.0
    return vjp_params(spec, params, x, e)


def merge(
    spec: NetworkSpec, coefficients: Sequence[float], params_list: Sequence[ParamsLike]
) -> tuple[NetworkSpec, NetworkParams]:
    """Realize ``sum_l c_l N(., theta_l)`` as one network of widths ``n * m_j``.

    The first-layer weights and all hidden biases are stacked, the interior
    weights are placed block-diagonally, and the output row concatenates the
    scaled last-layer weights; the output bias is the combination of the
    individual output biases.
    """
    if len(params_list) == 0:
        raise ValueError("merge needs at least one network")
    c = np.asarray(coefficients, dtype=float)
    if c.shape != (len(params_list),):
        raise ShapeError("one coefficient per network is required")
    nets = [as_params(spec, p).layers for p in params_list]
    n = len(nets)
    D = spec.depth
    merged_spec = NetworkSpec(
        spec.input_dim,
        spec.output_dim,
        tuple(n * m for m in spec.hidden),
        spec.activation,
    )
    if D == 1:
        # no hidden layer: the combination is itself affine
        W = sum(cl * net[0][0] for cl, net in zip(c, nets))
        b = sum(cl * net[0][1] for cl, net in zip(c, nets))
        return merged_spec, NetworkParams(((W, b),))

    layers = [(
        np.vstack([net[0][0] for net in nets]),
        np.concatenate([net[0][1] for net in nets]),
    )]
    for j in range(1, D - 1):
        rows, cols = spec.layer_shapes()[j]
        W = np.zeros((n * rows, n * cols))
        for l, net in enumerate(nets):
            W[l * rows:(l + 1) * rows, l * cols:(l + 1) * cols] = net[j][0]
        layers.append((W, np.concatenate([net[j][1] for net in nets])))
    W_out = np.hstack([cl * net[D - 1][0] for cl, net in zip(c, nets)])
    b_out = np.zeros(spec.output_dim)
    for cl, net in zip(c, nets):
        b_out = b_out + cl * net[D - 1][1]
    layers.append((W_out, b_out))
    return merged_spec, NetworkParams(tuple(layers))
