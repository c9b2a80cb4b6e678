"""Central finite-difference check of every model parameter gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import no_grad
from .model import ModelConfig, WPMixer


def toy_config() -> ModelConfig:
    return ModelConfig(n_channels=2, seq_len=32, pred_len=8, wavelet="db2", level=1,
                       patch_len=8, stride=4, d_model=8, tfactor=2, dfactor=2,
                       mixer_dropout=0.0, embed_dropout=0.0)


@dataclass(frozen=True)
class ParamCheck:
    name: str
    size: int
    rel_error: float
    max_abs_grad: float


def _mse(model: WPMixer, x: np.ndarray, target: np.ndarray):
    d = model.forward(x, training=True) - target
    return (d * d).mean()


def randomize_affine(model: WPMixer, rng: np.random.Generator) -> None:
    """Move batch-norm and RevIN affine parameters off their identity initialisation.

    A check at ``gamma = 1, beta = 0`` would never exercise the scale paths.
    """
    for name, p in model.named_parameters().items():
        if name.endswith((".gamma", ".weight")) and ("revin" in name or "_bn" in name):
            p.data = rng.uniform(0.5, 1.5, p.shape)
        elif name.endswith(".beta") or (name.endswith(".bias") and "revin" in name):
            p.data = rng.uniform(-0.5, 0.5, p.shape)


def check_gradients(model: WPMixer, x: np.ndarray, target: np.ndarray,
                    step: float = 1e-5, floor: float = 1e-5) -> list[ParamCheck]:
    """Compare analytic gradients of an MSE loss with central differences.

    The error for a parameter tensor is ``max|g_a - g_n| / max(max|g_a|, max|g_n|, floor)``.
    Normalising by the tensor's gradient scale keeps single near-zero entries
    from dominating; the floor covers tensors whose gradient is identically
    zero (a bias feeding straight into batch norm), where the numeric side is
    pure round-off of order ``1e-16 / step``.
    """
    model.zero_grad()
    _mse(model, x, target).backward()
    out = []
    for name, p in model.named_parameters().items():
        analytic = p.grad.copy()
        numeric = np.empty_like(p.data)
        flat, nflat = p.data.reshape(-1), numeric.reshape(-1)
        with no_grad():
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                up = _mse(model, x, target).item()
                flat[i] = orig - step
                down = _mse(model, x, target).item()
                flat[i] = orig
                nflat[i] = (up - down) / (2.0 * step)
        scale = max(np.abs(analytic).max(), np.abs(numeric).max())
        err = float(np.abs(analytic - numeric).max() / max(scale, floor))
        out.append(ParamCheck(name, p.size, err, float(scale)))
    return out


def run_toy_check(seed: int = 0, batch: int = 4, cfg: ModelConfig | None = None) -> list[ParamCheck]:
    cfg = toy_config() if cfg is None else cfg
    rng = np.random.default_rng(seed)
    model = WPMixer(cfg, rng)
    randomize_affine(model, rng)
    x = rng.uniform(-2.0, 2.0, (batch, cfg.n_channels, cfg.seq_len))
    target = rng.uniform(-2.0, 2.0, (batch, cfg.n_channels, cfg.pred_len))
    return check_gradients(model, x, target)
