"""Unguided upsamplers: nearest, bilinear and bicubic (Keys, a=-0.5).

All three are separable and share one coordinate convention: HR pixel
``x`` samples the LR grid at ``(x + 0.5) / alpha - 0.5``, with indices
outside the source clamped to the edge.
"""

import numpy as np

from .raster import DimensionError, as_map

KEYS_A = -0.5


def keys_kernel(t, a: float = KEYS_A):
    t = np.abs(np.asarray(t, dtype=np.float64))
    t2, t3 = t * t, t * t * t
    near = (a + 2) * t3 - (a + 3) * t2 + 1
    far = a * t3 - 5 * a * t2 + 8 * a * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


def _lr_coords(n_lr: int, alpha: int) -> np.ndarray:
    return (np.arange(n_lr * alpha) + 0.5) / alpha - 0.5


def _weights_nearest(n: int, alpha: int) -> np.ndarray:
    M = np.zeros((n * alpha, n))
    M[np.arange(n * alpha), np.arange(n * alpha) // alpha] = 1.0
    return M


def _weights_linear(n: int, alpha: int) -> np.ndarray:
    x = _lr_coords(n, alpha)
    i0 = np.floor(x).astype(int)
    t = x - i0
    M = np.zeros((n * alpha, n))
    rows = np.arange(n * alpha)
    np.add.at(M, (rows, np.clip(i0, 0, n - 1)), 1 - t)
    np.add.at(M, (rows, np.clip(i0 + 1, 0, n - 1)), t)
    return M


def _weights_cubic(n: int, alpha: int) -> np.ndarray:
    x = _lr_coords(n, alpha)
    i0 = np.floor(x).astype(int)
    M = np.zeros((n * alpha, n))
    rows = np.arange(n * alpha)
    for k in (-1, 0, 1, 2):
        idx = i0 + k
        np.add.at(M, (rows, np.clip(idx, 0, n - 1)), keys_kernel(x - idx))
    return M


def _separable(source, alpha, weights):
    s = as_map(source).astype(np.float64)
    alpha = int(alpha)
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    h, w = s.shape
    return weights(h, alpha) @ s @ weights(w, alpha).T


def upsample_nearest(source, alpha: int) -> np.ndarray:
    s = as_map(source)
    alpha = int(alpha)
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    return np.repeat(np.repeat(s.astype(np.float64), alpha, axis=0), alpha, axis=1)


def upsample_bilinear(source, alpha: int) -> np.ndarray:
    return _separable(source, alpha, _weights_linear)


def upsample_bicubic(source, alpha: int) -> np.ndarray:
    h, w = as_map(source).shape
    if h < 2 or w < 2:
        raise DimensionError(f"bicubic needs a source of at least 2x2, got {h}x{w}")
    return _separable(source, alpha, _weights_cubic)
