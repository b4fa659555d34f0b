"""Numeric inner loops, JIT-compiled with numba when available.

Set ``MZMBIAS_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
Both paths return identical results for the integer-code ADC average; the
window averages agree to summation rounding.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("MZMBIAS_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _np_quantized_code_sum(v, z, sigma, lsb, top_code):
    x = v + sigma * z
    codes = np.floor(x / lsb + 0.5)
    np.clip(codes, 0.0, top_code, out=codes)
    return int(codes.sum())


def _np_transmission_window_means(theta, scale, depth, block):
    p = scale * (1.0 + depth * np.cos(theta))
    out = np.empty(1 + (p.size - 1) // block)
    out[0] = p[0]
    windows = p[1:].reshape(-1, block)
    # offset from the first sample so a constant window averages exactly
    first = windows[:, 0]
    out[1:] = first + (windows - first[:, None]).sum(axis=1) / block
    return out


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_quantized_code_sum(v, z, sigma, lsb, top_code):
        total = 0
        for i in range(z.size):
            c = np.floor((v + sigma * z[i]) / lsb + 0.5)
            if c < 0.0:
                c = 0.0
            elif c > top_code:
                c = top_code
            total += np.int64(c)
        return total

    @njit(cache=True, nogil=True)
    def _nb_transmission_window_means(theta, scale, depth, block):
        n_out = 1 + (theta.size - 1) // block
        out = np.empty(n_out)
        out[0] = scale * (1.0 + depth * np.cos(theta[0]))
        for k in range(1, n_out):
            acc = 0.0
            start = 1 + (k - 1) * block
            first = scale * (1.0 + depth * np.cos(theta[start]))
            for i in range(start, start + block):
                acc += scale * (1.0 + depth * np.cos(theta[i])) - first
            out[k] = first + acc / block
        return out

    def quantized_code_sum(v, z, sigma, lsb, top_code):
        return int(_nb_quantized_code_sum(float(v), z, float(sigma), float(lsb), float(top_code)))

    def transmission_window_means(theta, scale, depth, block):
        return _nb_transmission_window_means(np.ascontiguousarray(theta, dtype=np.float64),
                                             float(scale), float(depth), int(block))

else:
    quantized_code_sum = _np_quantized_code_sum
    transmission_window_means = _np_transmission_window_means


def quantized_code_sum_numpy(v, z, sigma, lsb, top_code):
    return _np_quantized_code_sum(v, z, sigma, lsb, top_code)


def transmission_window_means_numpy(theta, scale, depth, block):
    return _np_transmission_window_means(np.asarray(theta, dtype=float), scale, depth, block)
