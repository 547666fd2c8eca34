"""Direct training of an expansion sum_l beta_l N(., theta_l).

Coefficients and parameters are trained jointly by full-batch gradient
descent on the squared loss sum_j |f(x_j) - y_j|^2. Every iteration starts
from the configured learning rate and halves it until the loss does not
increase, so the recorded loss sequence is monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .candidates import BoxSpec
from .kernel import Dataset, WeightFn, rho
from .network import Activation, NetworkSpec, forward, param_dim, vjp_params

MAX_HALVINGS = 60


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    init_box: BoxSpec
    atom_count: int | None = None  # defaults to t*m
    learning_rate: float = 0.1
    max_iters: int = 1000
    seed: int = 0
    loss: str = "square"
    weighted: bool = False  # multiply each term by rho(theta_l)

    def __post_init__(self):
        if self.atom_count is not None and self.atom_count < 1:
            raise ValueError("atom_count must be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.loss != "square":
            raise ValueError("only the square loss is supported")


@dataclass
class Expansion:
    """f(x) = sum_l beta_l N(x, theta_l), optionally with rho(theta_l) factors."""

    spec: NetworkSpec
    betas: np.ndarray
    thetas: np.ndarray
    weight: WeightFn | None = None

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros((X.shape[0], self.spec.output_dim))
        for beta, theta in zip(self.betas, self.thetas):
            scale = beta if self.weight is None else beta * rho(self.weight, theta)
            out += scale * forward(self.spec, theta, X)
        return out


@dataclass
class TrainTrace:
    losses: list[float]
    betas: np.ndarray
    thetas: np.ndarray
    grad_check_max_rel_err: float | None = None
    relu_kink_convention: bool = False
    halvings: list[int] = field(default_factory=list)


def _unpack(z, L, d):
    return z[:L], z[L:].reshape(L, d)


def _loss_and_grad(spec, X, Y, betas, thetas, weight=None, need_grad=True):
    L = betas.size
    outs = np.stack([forward(spec, th, X) for th in thetas])  # (L, m, t)
    if weight is not None:
        factors = np.array([rho(weight, th) for th in thetas])
        outs = outs * factors[:, None, None]
    R = np.tensordot(betas, outs, axes=1) - Y  # (m, t)
    loss = float(np.sum(R * R))
    if not need_grad:
        return loss, None
    g_beta = 2.0 * np.einsum("lmt,mt->l", outs, R)
    g_theta = np.empty_like(thetas)
    for l in range(L):
        cot = 2.0 * betas[l] * R
        if weight is None:
            g_theta[l] = vjp_params(spec, thetas[l], X, cot)
        else:
            f = factors[l]
            # d/dtheta of rho(theta) N = rho dN + N (-2 alpha theta) rho
            g_theta[l] = f * vjp_params(spec, thetas[l], X, cot)
            g_theta[l] += -2.0 * weight.alpha * thetas[l] * float(np.sum(cot * outs[l]))
    return loss, np.concatenate([g_beta, g_theta.ravel()])


def loss_gradient(spec: NetworkSpec, data: Dataset, betas, thetas, weight=None):
    """Loss and its gradient with respect to (betas, flattened thetas)."""
    betas = np.asarray(betas, dtype=float)
    thetas = np.asarray(thetas, dtype=float).reshape(betas.size, param_dim(spec))
    return _loss_and_grad(spec, data.X, data.Y, betas, thetas, weight)


def grad_check(spec: NetworkSpec, data: Dataset, betas, thetas, h: float = 1e-5,
               gradient=None, weight=None) -> float:
    """Largest discrepancy between an analytic gradient and central differences.

    Each entry is compared as ``|g - g_fd| / max(1, |g|, |g_fd|)``. ``gradient``
    overrides the analytic gradient, e.g. to check a stored one.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError("step h must lie in [1e-7, 1e-3]")
    betas = np.asarray(betas, dtype=float)
    thetas = np.asarray(thetas, dtype=float).reshape(betas.size, param_dim(spec))
    L, d = thetas.shape
    if gradient is None:
        _, gradient = _loss_and_grad(spec, data.X, data.Y, betas, thetas, weight)
    gradient = np.asarray(gradient, dtype=float)
    z = np.concatenate([betas, thetas.ravel()])
    fd = np.empty_like(z)
    for i in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        lp, _ = _loss_and_grad(spec, data.X, data.Y, *_unpack(zp, L, d), weight, need_grad=False)
        lm, _ = _loss_and_grad(spec, data.X, data.Y, *_unpack(zm, L, d), weight, need_grad=False)
        fd[i] = (lp - lm) / (2.0 * h)
    denom = np.maximum(1.0, np.maximum(np.abs(gradient), np.abs(fd)))
    return float(np.max(np.abs(gradient - fd) / denom))


def train_expansion(spec: NetworkSpec, data: Dataset, cfg: TrainConfig):
    """Fit ``sum_l beta_l N(., theta_l)`` to ``data``; returns (Expansion, TrainTrace).

    Initialization is beta = 0 and theta uniform in ``cfg.init_box``.
    """
    d = param_dim(spec)
    if cfg.init_box.dim != d:
        raise ValueError("init_box dimension does not match the parameter dimension")
    L = cfg.atom_count or spec.output_dim * data.m
    rng = np.random.default_rng(cfg.seed)
    thetas = rng.uniform(cfg.init_box.lower, cfg.init_box.upper, size=(L, d))
    betas = np.zeros(L)
    weight = WeightFn() if cfg.weighted else None
    X, Y = data.X, data.Y

    loss, grad = _loss_and_grad(spec, X, Y, betas, thetas, weight)
    if not np.isfinite(loss):
        raise TrainingError("initial loss is not finite")
    losses = [loss]
    halvings = []
    for _ in range(cfg.max_iters):
        step = cfg.learning_rate
        z = np.concatenate([betas, thetas.ravel()])
        for k in range(MAX_HALVINGS + 1):
            b_new, t_new = _unpack(z - step * grad, L, d)
            new_loss, _ = _loss_and_grad(spec, X, Y, b_new, t_new, weight, need_grad=False)
            if not np.isfinite(new_loss) and k == MAX_HALVINGS:
                raise TrainingError("loss became non-finite during line search")
            if np.isfinite(new_loss) and new_loss <= loss:
                break
            step *= 0.5
        else:
            break  # no acceptable step: stationary to working precision
        betas, thetas = b_new.copy(), t_new.copy()
        halvings.append(k)
        loss, grad = _loss_and_grad(spec, X, Y, betas, thetas, weight)
        losses.append(loss)
        if loss == 0.0 or not np.any(grad):
            break
    expansion = Expansion(spec, betas, thetas, weight)
    trace = TrainTrace(losses, betas.copy(), thetas.copy(),
                       relu_kink_convention=spec.activation is Activation.RELU,
                       halvings=halvings)
    return expansion, trace
