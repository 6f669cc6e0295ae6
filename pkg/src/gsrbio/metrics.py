"""Regression and perception metrics, residual binning and throughput."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from .raster import DimensionError, as_map

# Peak used for PSNR/SSIM on BioMassters-scale AGB maps (t/px).
DEFAULT_PEAK = 10330.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def _pair(pred, ref):
    p = as_map(pred).astype(np.float64)
    r = as_map(ref).astype(np.float64)
    if p.shape != r.shape:
        raise DimensionError(f"prediction is {p.shape}, reference is {r.shape}")
    return p, r


def mae(pred, ref) -> float:
    p, r = _pair(pred, ref)
    return float(np.mean(np.abs(p - r)))


def rmse(pred, ref) -> float:
    p, r = _pair(pred, ref)
    return float(np.sqrt(np.mean((p - r) ** 2)))


def psnr_from_rmse(err: float, peak: float) -> float:
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    if err == 0:
        return math.inf
    return 20.0 * math.log10(peak / err)


def psnr(pred, ref, peak: float = DEFAULT_PEAK) -> float:
    """PSNR in dB; identical inputs give ``inf``."""
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    return psnr_from_rmse(rmse(pred, ref), peak)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img, g):
    n = g.size
    rows = np.lib.stride_tricks.sliding_window_view(img, n, axis=0)
    tmp = rows @ g
    cols = np.lib.stride_tricks.sliding_window_view(tmp, n, axis=1)
    return cols @ g


def ssim(pred, ref, peak: float = DEFAULT_PEAK) -> float:
    """Mean SSIM over fully interior 11x11 Gaussian windows (sigma 1.5)."""
    p, r = _pair(pred, ref)
    if min(p.shape) < SSIM_WINDOW:
        raise DimensionError(f"image {p.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    g = gaussian_window()
    mu_p = _filter_valid(p, g)
    mu_r = _filter_valid(r, g)
    var_p = _filter_valid(p * p, g) - mu_p ** 2
    var_r = _filter_valid(r * r, g) - mu_r ** 2
    cov = _filter_valid(p * r, g) - mu_p * mu_r
    num = (2 * mu_p * mu_r + c1) * (2 * cov + c2)
    den = (mu_p ** 2 + mu_r ** 2 + c1) * (var_p + var_r + c2)
    return float(np.mean(num / den))


@dataclass
class MetricReport:
    mae: float
    rmse: float
    psnr: float
    ssim: float
    peak_used: float
    n_pixels: int

    def as_dict(self):
        return asdict(self)


def evaluate(pred, ref, peak: float = DEFAULT_PEAK) -> MetricReport:
    p, r = _pair(pred, ref)
    e = rmse(p, r)
    return MetricReport(
        mae=mae(p, r),
        rmse=e,
        psnr=psnr_from_rmse(e, peak),
        ssim=ssim(p, r, peak),
        peak_used=float(peak),
        n_pixels=int(p.size),
    )


@dataclass
class ResidualBin:
    lo: float
    hi: float
    count: int
    q1: float | None = None
    median: float | None = None
    q3: float | None = None
    mean: float | None = None


@dataclass
class ResidualBins:
    bin_edges: list
    bins: list
    sample_count: int
    seed: int


def residual_bins(preds, refs, bin_edges, sample_count: int = 10000, seed: int = 0) -> ResidualBins:
    """Prediction-minus-truth errors on a seeded pixel subsample, binned by truth.

    Bins are half-open ``[lo, hi)`` except the last, which includes ``hi``.
    """
    if len(preds) != len(refs):
        raise ValueError(f"{len(preds)} predictions for {len(refs)} references")
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing with at least two entries")
    pairs = [_pair(p, r) for p, r in zip(preds, refs)]
    err = np.concatenate([(p - r).ravel() for p, r in pairs]) if pairs else np.empty(0)
    truth = np.concatenate([r.ravel() for _, r in pairs]) if pairs else np.empty(0)
    n = err.size
    rng = np.random.default_rng(seed)
    if n > sample_count:
        idx = np.sort(rng.choice(n, size=sample_count, replace=False))
        err, truth = err[idx], truth[idx]

    which = np.searchsorted(edges, truth, side="right") - 1
    which[truth == edges[-1]] = edges.size - 2
    bins = []
    for k in range(edges.size - 1):
        e = err[which == k]
        b = ResidualBin(float(edges[k]), float(edges[k + 1]), int(e.size))
        if e.size:
            b.q1, b.median, b.q3 = (float(v) for v in np.percentile(e, [25, 50, 75]))
            b.mean = float(e.mean())
        bins.append(b)
    return ResidualBins(edges.tolist(), bins, int(min(n, sample_count)), seed)


def throughput(method, records, repeats: int = 3, clock=time.perf_counter) -> float:
    """Median output rate in Mpix/s over ``repeats`` timed passes.

    ``method`` is called as ``method(source, guide)``; one untimed pass runs
    first.
    """
    records = list(records)
    if not records:
        raise ValueError("throughput needs at least one record")
    for rec in records:
        method(rec.source.values[0], rec.guide.values)
    rates = []
    for _ in range(max(1, int(repeats))):
        pixels = 0
        t0 = clock()
        for rec in records:
            out = method(rec.source.values[0], rec.guide.values)
            pixels += np.size(out)
        dt = clock() - t0
        rates.append(pixels / dt / 1e6 if dt > 0 else math.inf)
    return statistics.median(rates)
