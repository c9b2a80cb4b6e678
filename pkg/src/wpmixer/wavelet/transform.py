"""Multi-level 1-D DWT / IDWT over batched multivariate series.

Analysis uses zero padding: ``a[k] = sum_j dec_lo[j] x[2k+1-j]`` with ``x``
zero outside ``[0, L)``, giving ``(L + F - 1) // 2`` coefficients per band.
Synthesis is the matching upsample-convolve-crop, so the pair reconstructs
exactly once trimmed to the recorded input length.  Both directions are
linear tape ops whose backward passes are the transposed kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..autodiff import Tensor, as_tensor, make_op
from ..errors import ContractError, DecompositionDepthError
from .filters import FilterBank, filter_bank


def coeff_len(length: int, filter_len: int) -> int:
    if length < 1:
        raise ContractError(f"coeff_len: length must be >= 1, got {length}")
    return (length + filter_len - 1) // 2


def max_level(length: int, filter_len: int) -> int:
    """Deepest level whose every input still shrinks under analysis (input >= filter length)."""
    level = 0
    while length >= filter_len:
        length = coeff_len(length, filter_len)
        level += 1
    return level


def level_lengths(length: int, filter_len: int, level: int) -> list[int]:
    """Input length of each level followed by the final coefficient length."""
    if level < 1:
        raise DecompositionDepthError(f"decomposition level must be >= 1, got {level}")
    deepest = max_level(length, filter_len)
    if level > deepest:
        raise DecompositionDepthError(
            f"level {level} is too deep for length {length} with a {filter_len}-tap filter; "
            f"maximum feasible level is {deepest}")
    out = [length]
    for _ in range(level):
        out.append(coeff_len(out[-1], filter_len))
    return out


def _rows(x: np.ndarray) -> np.ndarray:
    return x.reshape(-1, x.shape[-1])


def _down(x: Tensor, f: np.ndarray, n_out: int) -> Tensor:
    lead, n = x.shape[:-1], x.shape[-1]
    y = _kernels.down(_rows(x.data), f, n_out).reshape(lead + (n_out,))
    rf = f[::-1].copy()
    return make_op("dwt_down", y, (x,),
                   lambda g: (_kernels.up(_rows(g), rf, n).reshape(lead + (n,)),))


def _up(y: Tensor, g_filter: np.ndarray, n_out: int) -> Tensor:
    lead, n = y.shape[:-1], y.shape[-1]
    x = _kernels.up(_rows(y.data), g_filter, n_out).reshape(lead + (n_out,))
    rg = g_filter[::-1].copy()
    return make_op("dwt_up", x, (y,),
                   lambda g: (_kernels.down(_rows(g), rg, n).reshape(lead + (n,)),))


def dwt_step(x, bank: FilterBank | str) -> tuple[Tensor, Tensor]:
    """One analysis level along the last axis: ``(approx, detail)``."""
    bank = filter_bank(bank) if isinstance(bank, str) else bank
    x = as_tensor(x)
    if x.ndim == 0 or x.shape[-1] < 1:
        raise ContractError(f"dwt_step: empty input of shape {x.shape}")
    n_out = coeff_len(x.shape[-1], bank.length)
    return _down(x, bank.dec_lo, n_out), _down(x, bank.dec_hi, n_out)


def idwt_step(approx, detail, bank: FilterBank | str, target_len: int) -> Tensor:
    """One synthesis level, trimmed to ``target_len`` samples."""
    bank = filter_bank(bank) if isinstance(bank, str) else bank
    approx, detail = as_tensor(approx), as_tensor(detail)
    if approx.shape != detail.shape:
        raise ContractError(f"idwt_step: approx {approx.shape} and detail {detail.shape} differ")
    return _up(approx, bank.rec_lo, target_len) + _up(detail, bank.rec_hi, target_len)


@dataclass
class CoefficientSet:
    """``[A_m, D_m, ..., D_1]`` plus the per-level input lengths needed to invert."""

    approx: Tensor
    details: list[Tensor]  # level m first, level 1 last
    level: int
    wavelet: str
    input_lengths: list[int] = field(default_factory=list)  # level 1 first

    def series(self) -> list[Tensor]:
        return [self.approx, *self.details]

    @classmethod
    def from_series(cls, series, wavelet: str, input_lengths: list[int]) -> CoefficientSet:
        series = list(series)
        return cls(series[0], series[1:], len(series) - 1, wavelet, list(input_lengths))


def decompose(x, wavelet: str, level: int) -> CoefficientSet:
    x = as_tensor(x)
    bank = filter_bank(wavelet)
    lengths = level_lengths(x.shape[-1], bank.length, level)
    details = []
    approx = x
    for _ in range(level):
        approx, d = dwt_step(approx, bank)
        details.append(d)
    return CoefficientSet(approx, details[::-1], level, wavelet, lengths[:-1])


def reconstruct(coeffs: CoefficientSet, target_len: int) -> Tensor:
    bank = filter_bank(coeffs.wavelet)
    if len(coeffs.details) != coeffs.level or len(coeffs.input_lengths) != coeffs.level:
        raise ContractError(
            f"reconstruct: level {coeffs.level} with {len(coeffs.details)} detail series and "
            f"{len(coeffs.input_lengths)} recorded lengths")
    approx = coeffs.approx
    for i, d in enumerate(coeffs.details):
        lvl = coeffs.level - i  # level being inverted
        want = coeff_len(coeffs.input_lengths[lvl - 1], bank.length)
        if approx.shape[-1] != want or d.shape[-1] != want:
            raise ContractError(
                f"reconstruct: level {lvl} expects {want} coefficients, got "
                f"approx {approx.shape[-1]} / detail {d.shape[-1]}")
        approx = idwt_step(approx, d, bank, coeffs.input_lengths[lvl - 1])
    if approx.shape[-1] != target_len:
        approx = approx[..., :target_len] if approx.shape[-1] > target_len else approx
    if approx.shape[-1] != target_len:
        raise ContractError(f"reconstruct: produced {approx.shape[-1]} samples, wanted {target_len}")
    return approx


def auxiliary_lengths(horizon: int, wavelet: str, level: int) -> list[int]:
    """Branch output lengths ``[T_A, T_Dm, ..., T_D1]`` for a length-``horizon`` series."""
    bank = filter_bank(wavelet)
    lengths = level_lengths(horizon, bank.length, level)
    return [lengths[-1]] + [lengths[i] for i in range(level, 0, -1)]
