"""Pure-numpy versions of the hot kernels (always available)."""

import numpy as np
from scipy.special import erf


def down(x, f, n_out):
    """``y[r, k] = sum_j f[j] * x[r, 2k + 1 - j]`` with ``x`` zero outside its support."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    rows, n = x.shape
    flen = f.shape[0]
    right = max(0, 2 * n_out + 1 - n) + 1
    xp = np.zeros((rows, flen + n + right))
    xp[:, flen:flen + n] = x
    y = np.zeros((rows, n_out))
    for j in range(flen):
        start = flen + 1 - j
        y += f[j] * xp[:, start:start + 2 * n_out:2]
    return y


def up(y, g, n_out):
    """``x[r, i] = sum_k y[r, k] * g[i + len(g) - 2 - 2k]`` (upsample, convolve, crop)."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    rows, n = y.shape
    glen = g.shape[0]
    width = max(2 * n + glen, glen - 2 + n_out)
    c = np.zeros((rows, width))
    for j in range(glen):
        c[:, j:j + 2 * n:2] += g[j] * y
    return np.ascontiguousarray(c[:, glen - 2:glen - 2 + n_out])


_SQRT1_2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu_forward(x):
    """``(x * Phi(x), Phi(x))`` with the erf form of the normal CDF."""
    x = np.asarray(x, dtype=np.float64)
    cdf = 0.5 * (1.0 + erf(x * _SQRT1_2))
    return x * cdf, cdf


def gelu_backward(g, x, cdf):
    """``g * (Phi(x) + x * phi(x))``."""
    return g * (cdf + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x))
