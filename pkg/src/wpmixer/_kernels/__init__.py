"""Hot kernels: strided convolutions behind the wavelet transforms and the GELU forward.

The compiled ``_dwt`` and ``_gelu`` extensions are used when they were built;
otherwise, or when ``WPMIXER_PURE_PYTHON=1`` is set, the numpy implementations
in ``_fallback`` are selected.  ``BACKEND`` names the active choice.
"""

import os

from . import _fallback

if os.environ.get("WPMIXER_PURE_PYTHON", "") not in ("", "0"):
    _dwt = _gelu = None
else:
    try:
        from . import _dwt, _gelu
    except ImportError:  # extensions not built
        _dwt = _gelu = None

if _dwt is not None:
    down, up = _dwt.down, _dwt.up
    gelu_forward = _gelu.gelu_forward
    BACKEND = "cython"
else:
    down, up = _fallback.down, _fallback.up
    gelu_forward = _fallback.gelu_forward
    BACKEND = "numpy"
gelu_backward = _fallback.gelu_backward

__all__ = ["BACKEND", "down", "gelu_backward", "gelu_forward", "up"]
