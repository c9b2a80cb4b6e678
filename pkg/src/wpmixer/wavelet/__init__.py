"""Filter banks and the multi-level discrete wavelet transform."""

from .filters import SUPPORTED, VANISHING_MOMENTS, FilterBank, check_filter_bank, filter_bank
from .transform import (
    CoefficientSet,
    auxiliary_lengths,
    coeff_len,
    decompose,
    dwt_step,
    idwt_step,
    level_lengths,
    max_level,
    reconstruct,
)

__all__ = [
    "SUPPORTED", "VANISHING_MOMENTS", "CoefficientSet", "FilterBank", "auxiliary_lengths",
    "check_filter_bank", "coeff_len", "decompose", "dwt_step", "filter_bank", "idwt_step",
    "level_lengths", "max_level", "reconstruct",
]
