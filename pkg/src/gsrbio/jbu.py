"""Joint bilateral upsampling.

Each HR pixel is a normalized sum over a (2r+1)^2 window of LR samples,
weighted by a spatial Gaussian on LR distance and a range Gaussian on the
L2 distance between standardized guide vectors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .raster import DimensionError, as_guide, as_map

log = logging.getLogger(__name__)


@dataclass
class JbuParams:
    sigma_spatial: float = 1.0
    sigma_range: float = 1.0
    window_radius: int = 2
    guide_mean: np.ndarray | None = None
    guide_std: np.ndarray | None = None

    def __post_init__(self):
        if self.sigma_spatial <= 0 or self.sigma_range <= 0:
            raise ValueError("JBU sigmas must be positive")
        if int(self.window_radius) < 1:
            raise ValueError("window_radius must be >= 1")
        if self.guide_std is not None and np.any(np.asarray(self.guide_std) <= 0):
            raise ValueError("guide_std entries must be positive")


def guide_stats(guide) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean and std; zero-variance channels get std 1."""
    g = as_guide(guide).astype(np.float64)
    mean = g.mean(axis=(1, 2))
    std = g.std(axis=(1, 2))
    std[std == 0] = 1.0
    return mean, std


def standardize_guide(guide, mean, std) -> np.ndarray:
    g = as_guide(guide).astype(np.float64)
    mean = np.asarray(mean, dtype=np.float64).reshape(-1)
    std = np.asarray(std, dtype=np.float64).reshape(-1)
    if mean.size != g.shape[0] or std.size != g.shape[0]:
        raise ValueError(f"stats have {mean.size}/{std.size} entries for {g.shape[0]} channels")
    if np.any(std == 0):
        raise ValueError("standard deviation of zero in guide statistics")
    return (g - mean[:, None, None]) / std[:, None, None]


def jbu_upsample(source, guide, params: JbuParams | None = None, alpha: int | None = None,
                 return_fallbacks: bool = False):
    """Upsample ``source`` (h x w) onto the grid of ``guide`` (C x alpha*h x alpha*w).

    Pixels whose joint weights all underflow fall back to spatial-only
    weights; their count is logged and returned with ``return_fallbacks``.
    """
    params = params or JbuParams()
    s = as_map(source).astype(np.float64)
    g = as_guide(guide)
    h, w = s.shape
    C, H, W = g.shape
    if alpha is None:
        alpha = H // h
    alpha = int(alpha)
    if (H, W) != (alpha * h, alpha * w):
        raise DimensionError(f"guide is {H}x{W}, expected {alpha * h}x{alpha * w} for alpha={alpha}")

    if params.guide_mean is None or params.guide_std is None:
        mean, std = guide_stats(g)
    else:
        mean, std = params.guide_mean, params.guide_std
    g = standardize_guide(g, mean, std)

    R = int(params.window_radius)
    ys = (np.arange(H) + 0.5) / alpha - 0.5
    xs = (np.arange(W) + 0.5) / alpha - 0.5
    cy = np.floor(ys + 0.5).astype(int)
    cx = np.floor(xs + 0.5).astype(int)
    inv_s = 1.0 / (2.0 * params.sigma_spatial ** 2)
    inv_r = 1.0 / (2.0 * params.sigma_range ** 2)

    num = np.zeros((H, W))
    den = np.zeros((H, W))
    num_sp = np.zeros((H, W))
    den_sp = np.zeros((H, W))
    for dy in range(-R, R + 1):
        qy = cy + dy
        vy = (qy >= 0) & (qy < h)
        qyc = np.clip(qy, 0, h - 1)
        fy = np.exp(-((ys - qy) ** 2) * inv_s) * vy
        gy = qyc * alpha + alpha // 2
        for dx in range(-R, R + 1):
            qx = cx + dx
            vx = (qx >= 0) & (qx < w)
            qxc = np.clip(qx, 0, w - 1)
            fx = np.exp(-((xs - qx) ** 2) * inv_s) * vx
            gx = qxc * alpha + alpha // 2
            f = np.outer(fy, fx)
            gq = g[:, gy[:, None], gx[None, :]]
            d2 = np.sum((g - gq) ** 2, axis=0)
            wgt = f * np.exp(-d2 * inv_r)
            sv = s[qyc[:, None], qxc[None, :]]
            num += wgt * sv
            den += wgt
            num_sp += f * sv
            den_sp += f

    bad = den == 0
    n_fallback = int(bad.sum())
    if n_fallback:
        log.warning("JBU: %d pixels fell back to spatial-only weights", n_fallback)
        num[bad] = num_sp[bad]
        den[bad] = den_sp[bad]
    out = num / den
    if return_fallbacks:
        return out, n_fallback
    return out
