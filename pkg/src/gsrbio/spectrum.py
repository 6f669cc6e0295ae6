"""Radix-2 2-D DFT and radial magnitude profiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import DimensionError, as_map


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _fft_last_axis(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time Cooley-Tukey along the last axis."""
    n = x.shape[-1]
    bits = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((np.arange(n) >> b) & 1) << (bits - 1 - b)
    a = x[..., rev].astype(np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        a = a.reshape(a.shape[:-1] + (n // size, size))
        even = a[..., :half]
        odd = a[..., half:] * tw
        a = np.concatenate([even + odd, even - odd], axis=-1)
        a = a.reshape(a.shape[:-2] + (n,))
        size *= 2
    return a


def fft2d(x) -> np.ndarray:
    """Unnormalized forward 2-D DFT of a map whose sides are powers of two."""
    m = as_map(x).astype(np.float64)
    H, W = m.shape
    if not (_is_pow2(H) and _is_pow2(W)):
        raise DimensionError(f"fft2d needs power-of-two sides, got {H}x{W}")
    rows = _fft_last_axis(m)
    return _fft_last_axis(rows.T).T


@dataclass
class RadialSpectrum:
    radii: np.ndarray
    mean_magnitude: np.ndarray
    count: np.ndarray
    std: np.ndarray | None = None


def radial_profile(spectrum) -> RadialSpectrum:
    """Mean |F| per integer frequency radius, DC in bin 0, up to min(H, W) // 2."""
    F = np.asarray(spectrum)
    H, W = F.shape
    u = np.fft.fftshift(np.fft.fftfreq(H, 1.0 / H))
    v = np.fft.fftshift(np.fft.fftfreq(W, 1.0 / W))
    r = np.sqrt(u[:, None] ** 2 + v[None, :] ** 2)
    mag = np.abs(np.fft.fftshift(F))
    bins = np.rint(r).astype(int)
    r_max = min(H, W) // 2
    keep = bins <= r_max
    count = np.bincount(bins[keep], minlength=r_max + 1)
    total = np.bincount(bins[keep], weights=mag[keep], minlength=r_max + 1)
    return RadialSpectrum(np.arange(r_max + 1), total / count, count)


def map_profile(x) -> RadialSpectrum:
    return radial_profile(fft2d(x))


def aggregate_profiles(profiles) -> RadialSpectrum:
    """Per-bin mean and population std across samples."""
    profiles = list(profiles)
    if not profiles:
        raise ValueError("no profiles to aggregate")
    radii = profiles[0].radii
    for p in profiles[1:]:
        if p.radii.shape != radii.shape or np.any(p.radii != radii):
            raise ValueError("profiles have different radius axes")
    stack = np.stack([p.mean_magnitude for p in profiles])
    return RadialSpectrum(radii.copy(), stack.mean(axis=0), profiles[0].count.copy(), stack.std(axis=0))
