"""Wavelet filter banks and their consistency checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, FilterBankError
from . import _tables

SUPPORTED = ("db2", "db3", "db5", "sym2", "sym3", "sym4", "sym5",
             "coif4", "coif5", "bior3.1", "bior3.5")

# vanishing moments of the analysis high-pass (dec_hi) filter
VANISHING_MOMENTS = {
    "db2": 2, "db3": 3, "db5": 5,
    "sym2": 2, "sym3": 3, "sym4": 4, "sym5": 5,
    "coif4": 8, "coif5": 10,
    "bior3.1": 3, "bior3.5": 3,
}


@dataclass(frozen=True)
class FilterBank:
    """Analysis and synthesis filters, PyWavelets orientation."""

    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray
    orthogonal: bool

    @property
    def length(self) -> int:
        return len(self.dec_lo)


def _from_lowpass(name: str, dec_lo, rec_lo, orthogonal: bool) -> FilterBank:
    dec_lo = np.asarray(dec_lo, dtype=np.float64)
    rec_lo = np.asarray(rec_lo, dtype=np.float64)
    sign = (-1.0) ** np.arange(len(dec_lo))
    # quadrature-mirror relations
    rec_hi = sign * dec_lo
    dec_hi = -sign * rec_lo
    for a in (dec_lo, dec_hi, rec_lo, rec_hi):
        a.setflags(write=False)
    return FilterBank(name, dec_lo, dec_hi, rec_lo, rec_hi, orthogonal)


def _build(name: str) -> FilterBank:
    if name in _tables.ORTHOGONAL:
        h = np.array(_tables.ORTHOGONAL[name], dtype=np.float64)
        return _from_lowpass(name, h, h[::-1].copy(), True)
    dec_int, dec_scale, rec_int, rec_scale = _tables.BIORTHOGONAL[name]
    dec = np.sqrt(2.0) * np.array(dec_int, dtype=np.float64) / dec_scale
    rec = np.sqrt(2.0) * np.array(rec_int, dtype=np.float64) / rec_scale
    return _from_lowpass(name, dec, rec, False)


def _matrices(bank: FilterBank, n: int):
    """Dense analysis / synthesis operators for a length-``n`` signal (check use only)."""
    from .._kernels import _fallback

    n_out = (n + bank.length - 1) // 2
    eye = np.eye(n)
    analysis = np.vstack([_fallback.down(eye, bank.dec_lo, n_out).T,
                          _fallback.down(eye, bank.dec_hi, n_out).T])
    ceye = np.eye(n_out)
    synthesis = np.hstack([_fallback.up(ceye, bank.rec_lo, n).T,
                           _fallback.up(ceye, bank.rec_hi, n).T])
    return analysis, synthesis


def check_filter_bank(bank: FilterBank, tol: float = 1e-12) -> None:
    """Raise :class:`FilterBankError` naming the wavelet if an identity fails."""
    h = bank.dec_lo
    if abs(h.sum() - np.sqrt(2.0)) > tol:
        raise FilterBankError(f"{bank.name}: sum(dec_lo) = {h.sum()!r}, expected sqrt(2)")
    if bank.orthogonal:
        n = len(h)
        for shift in range(0, n, 2):
            dot = float(np.dot(h[:n - shift], h[shift:]))
            want = 1.0 if shift == 0 else 0.0
            if abs(dot - want) > tol:
                raise FilterBankError(
                    f"{bank.name}: orthonormality violated at shift {shift} "
                    f"(got {dot!r}, expected {want})")
    else:
        if abs(bank.rec_lo.sum() - np.sqrt(2.0)) > tol:
            raise FilterBankError(f"{bank.name}: sum(rec_lo) = {bank.rec_lo.sum()!r}")
    n = 4 * bank.length
    analysis, synthesis = _matrices(bank, n)
    err = np.max(np.abs(synthesis @ analysis - np.eye(n)))
    if err > 1e3 * tol:
        raise FilterBankError(f"{bank.name}: perfect reconstruction fails (max error {err:.3e})")


_BANKS: dict[str, FilterBank] = {}


def filter_bank(name: str) -> FilterBank:
    """Return the filter bank for a supported wavelet name."""
    try:
        return _BANKS[name]
    except KeyError:
        raise ConfigError(
            f"unknown wavelet {name!r}; supported: {', '.join(SUPPORTED)}") from None


def self_check() -> None:
    for name in SUPPORTED:
        check_filter_bank(_BANKS[name])


for _name in SUPPORTED:
    _BANKS[_name] = _build(_name)
self_check()
