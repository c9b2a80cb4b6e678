"""Analytic floating-point operation count of one eval-mode forward pass.

Convention: a multiply-accumulate is 2 FLOPs; batch norm and GELU are 2 FLOPs
per element they touch.  Bias additions, residual adds and instance
normalisation are not counted.
"""

from __future__ import annotations

from collections import OrderedDict

from .model import ModelConfig, branch_geometry
from .wavelet import filter_bank, level_lengths


def flop_breakdown(cfg: ModelConfig, batch: int = 1) -> OrderedDict[str, int]:
    rows = batch * cfg.n_channels
    out: OrderedDict[str, int] = OrderedDict(
        (k, 0) for k in ("dwt", "embedding", "patch_mixer", "embedding_mixer", "batch_norm",
                         "gelu", "head", "idwt"))
    if cfg.decomposition:
        flen = filter_bank(cfg.wavelet).length
        for n in level_lengths(cfg.seq_len, flen, cfg.level)[1:]:
            out["dwt"] += 2 * 2 * n * flen * rows  # two filters, n outputs of flen taps
        for n in level_lengths(cfg.pred_len, flen, cfg.level)[1:]:
            out["idwt"] += 2 * 2 * n * flen * rows  # each coefficient scatters flen taps per filter
    for geo in branch_geometry(cfg):
        n, p, d, t = geo.n_patches, geo.patch_len, geo.d_model, geo.out_len
        cells = rows * n * d
        if cfg.embedding:
            out["embedding"] += 2 * rows * n * p * d
        modules = (2 if cfg.second_mixer else 1) if (cfg.patch_mixer or cfg.embedding_mixer) else 0
        for _ in range(modules):
            if cfg.patch_mixer:
                out["patch_mixer"] += 2 * 2 * rows * d * n * n * cfg.tfactor
                out["batch_norm"] += 2 * cells
                out["gelu"] += 2 * cells * cfg.tfactor
            if cfg.embedding_mixer:
                out["embedding_mixer"] += 2 * 2 * cells * d * cfg.dfactor
                out["batch_norm"] += 2 * cells
                out["gelu"] += 2 * cells * cfg.dfactor
        if modules == 2:
            out["batch_norm"] += 2 * cells  # trailing norm after the second module
        out["head"] += 2 * rows * n * d * t
    return out


def count_flops(cfg: ModelConfig, batch: int = 1) -> int:
    return sum(flop_breakdown(cfg, batch).values())


def gflops(cfg: ModelConfig, batch: int = 1) -> float:
    return count_flops(cfg, batch) / 1e9
