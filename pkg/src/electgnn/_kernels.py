"""Row-wise LayerNorm kernels, JIT-compiled with numba when it is importable."""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None


def _ln_forward_py(x, gain, bias, eps):
    mu = x.mean(axis=1, keepdims=True)
    centered = x - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=1, keepdims=True) + eps)
    xhat = centered * inv_std
    return xhat * gain + bias, xhat, inv_std[:, 0]


def _ln_backward_py(g, xhat, inv_std, gain):
    dxhat = g * gain
    dx = inv_std[:, None] * (
        dxhat - dxhat.mean(axis=1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
    )
    return dx, (g * xhat).sum(axis=0), g.sum(axis=0)


def _ln_forward_nb(x, gain, bias, eps):
    rows, cols = x.shape
    out = np.empty_like(x)
    xhat = np.empty_like(x)
    inv_std = np.empty(rows)
    for r in range(rows):
        mu = 0.0
        for c in range(cols):
            mu += x[r, c]
        mu /= cols
        var = 0.0
        for c in range(cols):
            d = x[r, c] - mu
            var += d * d
        s = 1.0 / np.sqrt(var / cols + eps)
        inv_std[r] = s
        for c in range(cols):
            v = (x[r, c] - mu) * s
            xhat[r, c] = v
            out[r, c] = v * gain[c] + bias[c]
    return out, xhat, inv_std


def _ln_backward_nb(g, xhat, inv_std, gain):
    rows, cols = g.shape
    dx = np.empty_like(g)
    dgain = np.zeros(cols)
    dbias = np.zeros(cols)
    for r in range(rows):
        m1 = 0.0
        m2 = 0.0
        for c in range(cols):
            d = g[r, c] * gain[c]
            m1 += d
            m2 += d * xhat[r, c]
            dgain[c] += g[r, c] * xhat[r, c]
            dbias[c] += g[r, c]
        m1 /= cols
        m2 /= cols
        for c in range(cols):
            dx[r, c] = inv_std[r] * (g[r, c] * gain[c] - m1 - xhat[r, c] * m2)
    return dx, dgain, dbias


if numba is not None:
    ln_forward = numba.njit(cache=True, fastmath=False)(_ln_forward_nb)
    ln_backward = numba.njit(cache=True, fastmath=False)(_ln_backward_nb)
else:  # pragma: no cover
    ln_forward = _ln_forward_py
    ln_backward = _ln_backward_py
