"""Layer primitives used by the forecaster: linear, GELU, batch norm, dropout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..errors import ConfigError, ContractError, DimensionError, UninitializedStatsError
from .tensor import Parameter, Tensor, make_op


def linear(x: Tensor, w: Parameter, b: Parameter | None = None) -> Tensor:
    """``y[..., j] = sum_k x[..., k] w[k, j] + b[j]`` over the last axis of ``x``."""
    if x.shape[-1] != w.shape[0]:
        raise DimensionError(f"linear: input {x.shape} does not match weight {w.shape}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, w.shape[0])
    wd = w.data
    y = x2 @ wd
    if b is not None:
        y += b.data
    inputs = (x, w) if b is None else (x, w, b)

    def backward(g):
        g2 = g.reshape(-1, wd.shape[1])
        gx = (g2 @ wd.T).reshape(x.shape) if x.requires_grad else None
        gw = x2.T @ g2 if w.requires_grad else None
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    return make_op("linear", y.reshape(lead + (wd.shape[1],)), inputs, backward)


def gelu(x: Tensor) -> Tensor:
    """Exact GELU, ``x * Phi(x)`` with the erf form of the normal CDF."""
    xd = x.data
    y, cdf = _kernels.gelu_forward(xd)

    def backward(g):
        return (_kernels.gelu_backward(g, xd, cdf),)

    return make_op("gelu", y, (x,), backward)


@dataclass
class BatchNormState:
    """Running statistics of one batch-norm site."""

    num_features: int
    momentum: float = 0.1
    eps: float = 1e-5
    running_mean: np.ndarray = field(default=None)
    running_var: np.ndarray = field(default=None)
    num_batches: int = 0

    def __post_init__(self):
        if self.running_mean is None:
            self.running_mean = np.zeros(self.num_features)
        if self.running_var is None:
            self.running_var = np.ones(self.num_features)


def batch_norm(x: Tensor, gamma: Parameter, beta: Parameter, state: BatchNormState,
               training: bool, axis: int = 1) -> Tensor:
    """Batch normalisation with ``axis`` as the channel axis.

    Statistics are taken over every other axis.  Training mode normalises with
    the biased batch variance and folds the batch moments into the running
    estimates (unbiased variance, as is conventional); eval mode uses the
    running estimates and refuses to run before any training pass.
    """
    axis %= x.ndim
    nf = x.shape[axis]
    if nf != gamma.shape[0] or nf != beta.shape[0]:
        raise DimensionError(f"batch_norm: {nf} channels on axis {axis} but gamma/beta have "
                             f"{gamma.shape[0]}/{beta.shape[0]}")
    red = tuple(i for i in range(x.ndim) if i != axis)
    bshape = [1] * x.ndim
    bshape[axis] = nf
    gd = gamma.data.reshape(bshape)
    bd = beta.data.reshape(bshape)
    xd = x.data

    if training:
        count = xd.size // nf
        if count < 2:
            raise ContractError(f"batch_norm: training needs >= 2 values per channel, got {count}")
        mu = xd.mean(axis=red, keepdims=True)
        xc = xd - mu
        var = (xc * xc).mean(axis=red, keepdims=True)
        inv = 1.0 / np.sqrt(var + state.eps)
        xhat = xc * inv
        m = state.momentum
        state.running_mean = (1 - m) * state.running_mean + m * mu.reshape(nf)
        state.running_var = (1 - m) * state.running_var + m * var.reshape(nf) * count / (count - 1)
        state.num_batches += 1

        def backward(g):
            gg = g * gd
            gx = inv * (gg - gg.mean(axis=red, keepdims=True)
                        - xhat * (gg * xhat).mean(axis=red, keepdims=True))
            return gx, (g * xhat).sum(axis=red), g.sum(axis=red)
    else:
        if state.num_batches == 0:
            raise UninitializedStatsError("batch_norm: eval mode before any training pass")
        inv = 1.0 / np.sqrt(state.running_var.reshape(bshape) + state.eps)
        xhat = (xd - state.running_mean.reshape(bshape)) * inv

        def backward(g):
            return g * gd * inv, (g * xhat).sum(axis=red), g.sum(axis=red)

    return make_op("batch_norm", xhat * gd + bd, (x, gamma, beta), backward)


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout: zero with probability ``p``, scale survivors by ``1/(1-p)``."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ContractError("dropout in training mode needs a random generator")
    mask = (rng.random(x.shape) >= p) * (1.0 / (1.0 - p))
    return make_op("dropout", x.data * mask, (x,), lambda g: (g * mask,))
