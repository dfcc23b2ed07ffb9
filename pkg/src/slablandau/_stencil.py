"""Central differences on the velocity lattice, zero extension.

Functions on the cube are extended by zero outside the box; admissible states
decay like mu at the box edge, so the one-sided truncation error at the rim is
dominated by the tail of the state itself.

Symmetric second-derivative components are packed in the fixed order
(11, 22, 33, 12, 13, 23) used throughout the package.
"""

from __future__ import annotations

import numpy as np

SYM_IDX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def _shift(f: np.ndarray, axis: int, offset: int) -> np.ndarray:
    """f translated by `offset` nodes along one of the last three axes, zero fill."""
    ax = f.ndim - 3 + axis
    out = np.zeros_like(f)
    src = [slice(None)] * f.ndim
    dst = [slice(None)] * f.ndim
    if offset > 0:
        dst[ax] = slice(offset, None)
        src[ax] = slice(None, -offset)
    else:
        dst[ax] = slice(None, offset)
        src[ax] = slice(-offset, None)
    out[tuple(dst)] = f[tuple(src)]
    return out


def grad(f: np.ndarray, dv: float) -> np.ndarray:
    """Central gradient, shape (3,) + f.shape."""
    out = np.empty((3,) + f.shape, dtype=f.dtype)
    for i in range(3):
        out[i] = (_shift(f, i, -1) - _shift(f, i, 1)) / (2.0 * dv)
    return out


def dcentral(f: np.ndarray, axis: int, dv: float) -> np.ndarray:
    """Second-order central first derivative along one velocity axis.

    Equivalent to (_shift(f,.,-1) - _shift(f,.,1)) / (2 dv) but accumulates
    through slices to avoid the shifted temporaries (this is the hot loop of
    the collision flux form).
    """
    ax = f.ndim - 3 + axis
    out = np.zeros(f.shape, dtype=f.dtype)

    def sl(a, b):
        idx = [slice(None)] * f.ndim
        idx[ax] = slice(a, b)
        return tuple(idx)

    out[sl(None, -1)] += f[sl(1, None)]
    out[sl(1, None)] -= f[sl(None, -1)]
    out *= 1.0 / (2.0 * dv)
    return out


def hess(f: np.ndarray, dv: float) -> np.ndarray:
    """Central second derivatives, shape (6,) + f.shape, order SYM_IDX."""
    out = np.empty((6,) + f.shape, dtype=f.dtype)
    inv2 = 1.0 / dv**2
    for i in range(3):
        out[i] = (_shift(f, i, -1) - 2.0 * f + _shift(f, i, 1)) * inv2
    for m, (i, j) in enumerate(SYM_IDX[3:], start=3):
        pp = _shift(_shift(f, i, -1), j, -1)
        pm = _shift(_shift(f, i, -1), j, 1)
        mp = _shift(_shift(f, i, 1), j, -1)
        mm = _shift(_shift(f, i, 1), j, 1)
        out[m] = (pp - pm - mp + mm) * (0.25 * inv2)
    return out


def sym_quad(sig: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Contraction sigma_ij x_i y_j for packed symmetric sigma (6, ...)."""
    out = sig[0] * x[0] * y[0] + sig[1] * x[1] * y[1] + sig[2] * x[2] * y[2]
    out = out + sig[3] * (x[0] * y[1] + x[1] * y[0])
    out = out + sig[4] * (x[0] * y[2] + x[2] * y[0])
    out = out + sig[5] * (x[1] * y[2] + x[2] * y[1])
    return out


def sym_contract(sig: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Full contraction sigma_ij h_ij for two packed symmetric (6, ...) arrays."""
    return (sig[0] * h[0] + sig[1] * h[1] + sig[2] * h[2]
            + 2.0 * (sig[3] * h[3] + sig[4] * h[4] + sig[5] * h[5]))
