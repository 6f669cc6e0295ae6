import numpy as np

from .raster import DimensionError, as_guide, as_map


def check_alpha(alpha) -> int:
    if isinstance(alpha, bool) or int(alpha) != alpha or alpha < 1:
        raise ValueError(f"alpha must be a positive integer, got {alpha!r}")
    return int(alpha)


def check_source(source) -> np.ndarray:
    s = np.asarray(as_map(source), dtype=np.float64)
    if s.size == 0:
        raise DimensionError("empty source map")
    if not np.all(np.isfinite(s)):
        raise ValueError("source contains non-finite values")
    return s


def check_guide(guide, source: np.ndarray, alpha: int) -> np.ndarray:
    if guide is None:
        raise ValueError("this method needs a guide image")
    g = as_guide(guide)
    h, w = source.shape
    if g.shape[1:] != (h * alpha, w * alpha):
        raise DimensionError(
            f"guide is {g.shape[1]}x{g.shape[2]}, expected {h * alpha}x{w * alpha} for alpha={alpha}"
        )
    if not np.all(np.isfinite(g)):
        raise ValueError("guide contains non-finite values")
    return g
