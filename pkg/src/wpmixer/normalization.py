"""Reversible instance normalisation (RevIN) over the last axis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter, Tensor, as_tensor, sqrt
from .errors import ContractError


@dataclass(frozen=True)
class RevInStats:
    """Per-instance, per-channel location and scale captured by ``normalize``.

    Both are tape tensors shaped ``(..., C, 1)``; gradients flow through them.
    """

    mean: Tensor
    std: Tensor


class RevIN:
    """Standardise each (instance, channel) series and undo it on the forecast.

    ``normalize`` returns the statistics instead of storing them, so one module
    can serve concurrent forward passes.
    """

    def __init__(self, num_channels: int, name: str = "revin", affine: bool = True,
                 eps: float = 1e-5):
        self.num_channels = num_channels
        self.eps = eps
        self.affine = affine
        if affine:
            self.weight = Parameter(np.ones(num_channels), f"{name}.weight")
            self.bias = Parameter(np.zeros(num_channels), f"{name}.bias")

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias] if self.affine else []

    def _affine_shape(self):
        return (self.num_channels, 1)

    def normalize(self, x) -> tuple[Tensor, RevInStats]:
        x = as_tensor(x)
        if x.shape[-1] < 1:
            raise ContractError("revin: series must have at least one step")
        if x.shape[-2] != self.num_channels:
            raise ContractError(f"revin: expected {self.num_channels} channels on axis -2, "
                                f"got shape {x.shape}")
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=-1, keepdims=True)
        std = sqrt(var + self.eps)
        y = xc / std
        if self.affine:
            y = y * self.weight.reshape(self._affine_shape()) + self.bias.reshape(self._affine_shape())
        return y, RevInStats(mu, std)

    def denormalize(self, y, stats: RevInStats | None) -> Tensor:
        if stats is None:
            raise ContractError("revin: denormalize called without statistics from normalize")
        y = as_tensor(y)
        if self.affine:
            y = (y - self.bias.reshape(self._affine_shape())) / self.weight.reshape(self._affine_shape())
        return y * stats.std + stats.mean


def revin_normalize(x, revin: RevIN) -> tuple[Tensor, RevInStats]:
    return revin.normalize(x)


def revin_denormalize(y, revin: RevIN, stats: RevInStats | None) -> Tensor:
    return revin.denormalize(y, stats)
