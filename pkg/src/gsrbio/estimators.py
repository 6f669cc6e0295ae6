"""Estimator wrappers around the upsamplers.

Every upsampler is called the same way, ``predict(source, guide)``, and
returns an H x W map. Unguided methods accept and ignore the guide.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_alpha, check_guide, check_source
from .interp import upsample_bicubic, upsample_bilinear, upsample_nearest
from .jbu import JbuParams, guide_stats, jbu_upsample
from .p2p import P2pConfig, fit_predict
from .raster import as_guide


class BaseUpsampler(BaseEstimator):
    guided = False

    def fit(self, sources=None, guides=None):
        """No-op for methods without dataset-level state."""
        return self

    def predict(self, source, guide=None) -> np.ndarray:
        alpha = check_alpha(self.alpha)
        s = check_source(source)
        g = check_guide(guide, s, alpha) if self.guided else None
        return self._upsample(s, g, alpha)

    def __call__(self, source, guide=None):
        return self.predict(source, guide)

    def _upsample(self, source, guide, alpha):
        raise NotImplementedError


class NearestUpsampler(BaseUpsampler):
    def __init__(self, alpha=8):
        self.alpha = alpha

    def _upsample(self, source, guide, alpha):
        return upsample_nearest(source, alpha)


class BilinearUpsampler(BaseUpsampler):
    def __init__(self, alpha=8):
        self.alpha = alpha

    def _upsample(self, source, guide, alpha):
        return upsample_bilinear(source, alpha)


class BicubicUpsampler(BaseUpsampler):
    def __init__(self, alpha=8):
        self.alpha = alpha

    def _upsample(self, source, guide, alpha):
        return upsample_bicubic(source, alpha)


class JBUUpsampler(BaseUpsampler):
    """Joint bilateral upsampling.

    With ``standardize="sample"`` each guide is z-scored with its own band
    statistics. With ``"fit"``, ``fit`` pools statistics over the given
    guides and those are reused for every prediction.
    """

    guided = True

    def __init__(self, alpha=8, sigma_spatial=1.0, sigma_range=1.0, window_radius=2,
                 standardize="sample"):
        self.alpha = alpha
        self.sigma_spatial = sigma_spatial
        self.sigma_range = sigma_range
        self.window_radius = window_radius
        self.standardize = standardize

    def fit(self, sources=None, guides=None):
        if self.standardize not in ("sample", "fit"):
            raise ValueError(f"standardize must be 'sample' or 'fit', got {self.standardize!r}")
        if self.standardize == "fit":
            if not guides:
                raise ValueError("standardize='fit' needs guides to compute statistics from")
            stack = np.concatenate([as_guide(g).reshape(as_guide(g).shape[0], -1) for g in guides], axis=1)
            self.guide_mean_, self.guide_std_ = guide_stats(stack[:, None, :])
        return self

    def _upsample(self, source, guide, alpha):
        mean = std = None
        if self.standardize == "fit":
            if not hasattr(self, "guide_mean_"):
                raise RuntimeError("JBUUpsampler(standardize='fit') used before fit")
            mean, std = self.guide_mean_, self.guide_std_
        params = JbuParams(self.sigma_spatial, self.sigma_range, self.window_radius, mean, std)
        out, self.n_fallback_ = jbu_upsample(source, guide, params, alpha, return_fallbacks=True)
        return out


class P2PUpsampler(BaseUpsampler):
    """Per-sample fitted pixel-to-pixel network; ``diagnostics_`` holds the last fit."""

    guided = True

    def __init__(self, alpha=8, lam=1e-4, step_size=1e-3, max_iters=2000, plateau_window=100,
                 plateau_tol=1e-5, seed=0, hidden=(32, 32)):
        self.alpha = alpha
        self.lam = lam
        self.step_size = step_size
        self.max_iters = max_iters
        self.plateau_window = plateau_window
        self.plateau_tol = plateau_tol
        self.seed = seed
        self.hidden = hidden

    def config(self) -> P2pConfig:
        return P2pConfig(self.lam, self.step_size, self.max_iters, self.plateau_window,
                         self.plateau_tol, self.seed, tuple(self.hidden))

    def _upsample(self, source, guide, alpha):
        pred, self.diagnostics_ = fit_predict(source, guide, alpha, self.config())
        return pred


METHODS = {
    "nearest": NearestUpsampler,
    "bilinear": BilinearUpsampler,
    "bicubic": BicubicUpsampler,
    "jbu": JBUUpsampler,
    "p2p": P2PUpsampler,
}


def make_upsampler(name: str, alpha: int = 8, **params) -> BaseUpsampler:
    try:
        cls = METHODS[name]
    except KeyError:
        raise KeyError(f"unknown method {name!r}; valid: {', '.join(METHODS)}") from None
    return cls(alpha=alpha, **params)
