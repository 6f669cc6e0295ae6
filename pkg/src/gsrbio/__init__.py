"""Guided super-resolution of low-resolution raster maps (e.g. above-ground
biomass) with high-resolution multi-band guides, plus an evaluation harness."""

__version__ = "0.1.0"

from .estimators import (  # noqa: E402
    METHODS,
    BicubicUpsampler,
    BilinearUpsampler,
    JBUUpsampler,
    NearestUpsampler,
    P2PUpsampler,
    make_upsampler,
)
from .raster import PatchRecord, Raster, downsample_avg, read_bundle, write_bundle  # noqa: E402

__all__ = [
    "METHODS",
    "BicubicUpsampler",
    "BilinearUpsampler",
    "JBUUpsampler",
    "NearestUpsampler",
    "P2PUpsampler",
    "PatchRecord",
    "Raster",
    "downsample_avg",
    "make_upsampler",
    "read_bundle",
    "write_bundle",
]
