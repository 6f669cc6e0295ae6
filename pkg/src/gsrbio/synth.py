"""Seeded synthetic patches: a target map plus correlated guide bands."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .raster import PatchRecord, Raster, _check_divisible, downsample_avg


@dataclass(frozen=True)
class SynthParams:
    """Generator settings.

    ``smooth_scale`` and ``texture_scale`` are binomial low-pass radii in HR
    pixels. ``texture_scale`` controls the size of the sharp-edged patches
    added with weight ``texture_gain``. ``mix_a`` / ``mix_b`` override the
    drawn mixing coefficients; ``edge_aligned`` forces guide band 0 to be an
    exact, noise-free copy of the normalized target.
    """

    seed: int = 0
    height: int = 64
    width: int = 64
    alpha: int = 8
    guide_channels: int = 15
    smooth_scale: int = 128
    texture_gain: float = 1.0
    texture_scale: int = 32
    noise_sigma_per_channel: tuple | None = None
    value_range: tuple = (0.0, 400.0)
    mix_a: tuple | None = None
    mix_b: tuple | None = None
    edge_aligned: bool = False
    units: str = "t/px"

    def __post_init__(self):
        _check_divisible(self.height, self.width, self.alpha)
        if self.guide_channels < 1:
            raise ValueError("guide_channels must be >= 1")
        lo, hi = self.value_range
        if not lo < hi:
            raise ValueError(f"value_range min must be < max, got {self.value_range}")
        if self.smooth_scale < 0 or self.texture_scale < 0:
            raise ValueError("low-pass radii must be non-negative")
        sig = self.noise_sigmas()
        if np.any(sig < 0):
            raise ValueError("noise sigmas must be non-negative")
        for name in ("mix_a", "mix_b"):
            v = getattr(self, name)
            if v is not None and len(v) != self.guide_channels:
                raise ValueError(f"{name} needs {self.guide_channels} entries, got {len(v)}")

    def noise_sigmas(self) -> np.ndarray:
        if self.noise_sigma_per_channel is None:
            sig = np.full(self.guide_channels, 0.02)
        else:
            sig = np.asarray(self.noise_sigma_per_channel, dtype=np.float64)
            if sig.shape != (self.guide_channels,):
                raise ValueError(
                    f"noise_sigma_per_channel needs {self.guide_channels} entries, got {sig.shape}"
                )
        return sig


def binomial_kernel(radius: int) -> np.ndarray:
    n = 2 * int(radius)
    k = np.array([math.comb(n, i) for i in range(n + 1)], dtype=np.float64)
    return k / k.sum()


def lowpass(x: np.ndarray, radius: int) -> np.ndarray:
    """Separable binomial low-pass with symmetric edge extension."""
    if radius == 0:
        return x.astype(np.float64)
    k = binomial_kernel(radius)
    r = int(radius)
    out = x.astype(np.float64)
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (r, r)
        p = np.pad(out, pad, mode="symmetric")
        win = np.lib.stride_tricks.sliding_window_view(p, 2 * r + 1, axis=axis)
        out = win @ k
    return out


def _unit_field(rng, shape, radius):
    f = lowpass(rng.standard_normal(shape), radius)
    f -= f.mean()
    sd = f.std()
    return f / sd if sd > 0 else f


def gen_sample(params: SynthParams, id: str | None = None) -> PatchRecord:
    p = params
    rng = np.random.default_rng(p.seed)
    shape = (p.height, p.width)
    C = p.guide_channels

    base = _unit_field(rng, shape, p.smooth_scale)
    patches = np.tanh(3.0 * _unit_field(rng, shape, p.texture_scale))
    patches -= patches.mean()
    z = base + p.texture_gain * patches
    lo, hi = (float(v) for v in p.value_range)
    norm = np.clip(0.5 + z / 6.0, 0.0, 1.0)
    target = (lo + (hi - lo) * norm).astype(np.float32)
    # guides see the target through the float32 grid, normalized to [0, 1]
    tn = (target.astype(np.float64) - lo) / (hi - lo)

    a = rng.uniform(0.3, 1.0, C) if p.mix_a is None else np.asarray(p.mix_a, dtype=np.float64)
    b = rng.uniform(0.3, 1.0, C) if p.mix_b is None else np.asarray(p.mix_b, dtype=np.float64)
    sig = p.noise_sigmas().copy()
    if p.edge_aligned:
        a, b = a.copy(), b.copy()
        a[0], b[0] = 1.0, 0.0
        sig[:] = 0.0

    guide = np.empty((C,) + shape)
    for k in range(C):
        other = _unit_field(rng, shape, p.smooth_scale)
        noise = rng.standard_normal(shape)
        guide[k] = a[k] * tn + b[k] * 0.25 * other + sig[k] * noise

    source = downsample_avg(target, p.alpha)
    return PatchRecord(
        id=id if id is not None else f"synth-s{p.seed}",
        guide=Raster(guide, ""),
        target=Raster(target, p.units),
        source=Raster(source, p.units),
        alpha=p.alpha,
    )


def gen_dataset(params: SynthParams, count: int) -> list[PatchRecord]:
    return [
        gen_sample(replace(params, seed=params.seed + i), id=f"synth-{i:04d}")
        for i in range(count)
    ]
