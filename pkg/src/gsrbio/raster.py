"""Raster containers, block-average pooling, coordinate grids, splits and
the on-disk patch-bundle format."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DimensionError(ValueError):
    pass


class BundleFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Raster:
    """A C x H x W float32 grid.

    ``values`` is always stored as a contiguous float32 array; 2-D input is
    promoted to a single channel.
    """

    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 2:
            v = v[None]
        if v.ndim != 3 or min(v.shape) < 1:
            raise DimensionError(f"raster must be C x H x W with positive sizes, got shape {v.shape}")
        v = np.ascontiguousarray(v, dtype=np.float32)
        if not np.all(np.isfinite(v)):
            raise ValueError("raster contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return (
            self.units == other.units
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True)
class PatchRecord:
    """One sample: HR guide, HR target and the LR source pooled from it."""

    id: str
    guide: Raster
    target: Raster
    source: Raster
    alpha: int

    def __post_init__(self):
        a = self.alpha
        if not isinstance(a, (int, np.integer)) or a < 1:
            raise ValueError(f"alpha must be a positive integer, got {a!r}")
        if self.target.channels != 1 or self.source.channels != 1:
            raise DimensionError("target and source must be single-channel")
        H, W = self.target.height, self.target.width
        if (self.guide.height, self.guide.width) != (H, W):
            raise DimensionError(
                f"guide is {self.guide.height}x{self.guide.width}, target is {H}x{W}"
            )
        _check_divisible(H, W, a)
        if (self.source.height, self.source.width) != (H // a, W // a):
            raise DimensionError(
                f"source is {self.source.height}x{self.source.width}, expected {H // a}x{W // a}"
            )

    @property
    def height(self) -> int:
        return self.target.height

    @property
    def width(self) -> int:
        return self.target.width


@dataclass(frozen=True)
class DatasetSplit:
    seed: int
    ratios: tuple[float, float, float]
    train_ids: list[str] = field(default_factory=list)
    val_ids: list[str] = field(default_factory=list)
    test_ids: list[str] = field(default_factory=list)


def _check_divisible(H, W, alpha):
    if H % alpha or W % alpha:
        raise DimensionError(f"H={H} and W={W} must both be divisible by alpha={alpha}")


def as_map(x) -> np.ndarray:
    """Return a single-channel raster or array as a 2-D array."""
    v = x.values if isinstance(x, Raster) else np.asarray(x)
    if v.ndim == 3:
        if v.shape[0] != 1:
            raise DimensionError(f"expected a single-channel map, got {v.shape[0]} channels")
        v = v[0]
    if v.ndim != 2:
        raise DimensionError(f"expected a 2-D map, got shape {v.shape}")
    return v


def as_guide(x) -> np.ndarray:
    """Return a guide raster or array as a C x H x W array."""
    v = x.values if isinstance(x, Raster) else np.asarray(x)
    if v.ndim == 2:
        v = v[None]
    if v.ndim != 3:
        raise DimensionError(f"expected a C x H x W guide, got shape {v.shape}")
    return v


def downsample_avg(x, alpha: int) -> np.ndarray:
    """Average-pool a 2-D map over non-overlapping alpha x alpha blocks.

    Accumulates in float64; float32 input yields float32 output.
    """
    m = as_map(x)
    alpha = int(alpha)
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    H, W = m.shape
    _check_divisible(H, W, alpha)
    out = m.astype(np.float64).reshape(H // alpha, alpha, W // alpha, alpha).mean(axis=(1, 3))
    if m.dtype == np.float32:
        out = out.astype(np.float32)
    return out


def coord_grid(height: int, width: int) -> np.ndarray:
    """Normalized pixel-center coordinates, shape (2, H, W): (row, col)."""
    if height < 1 or width < 1:
        raise ValueError(f"grid dimensions must be positive, got {height}x{width}")
    r = (np.arange(height) + 0.5) / height
    c = (np.arange(width) + 0.5) / width
    rr, cc = np.meshgrid(r, c, indexing="ij")
    return np.stack([rr, cc])


def split_dataset(ids, ratios=(0.6, 0.2, 0.2), seed: int = 0) -> DatasetSplit:
    """Seeded shuffle of ``ids`` followed by contiguous train/val/test cuts.

    The shuffle is numpy's Fisher-Yates permutation driven by a PCG64
    generator seeded with ``seed``.
    """
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids in split input")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three positive reals summing to 1, got {ratios}")
    n = len(ids)
    order = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    shuffled = [ids[i] for i in order]
    a = int(np.floor(n * ratios[0]))
    b = int(np.floor(n * (ratios[0] + ratios[1])))
    return DatasetSplit(seed, ratios, shuffled[:a], shuffled[a:b], shuffled[b:])


# -- patch bundles ---------------------------------------------------------

_PAYLOADS = ("guide", "target", "source")


def write_bundle(record: PatchRecord, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "id": record.id,
        "alpha": int(record.alpha),
        "H": record.height,
        "W": record.width,
        "guide_channels": record.guide.channels,
        "dtype": "f32",
        "byte_order": "little",
        "layout": "CHW planar",
        "units": {name: getattr(record, name).units for name in _PAYLOADS},
    }
    for name in _PAYLOADS:
        getattr(record, name).values.astype("<f4").tofile(path / f"{name}.bin")
    with open(path / "meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


def _read_payload(path: Path, name: str, shape, units: str) -> Raster:
    fname = path / f"{name}.bin"
    if not fname.is_file():
        raise BundleFormatError(f"{fname}: missing payload")
    data = np.fromfile(fname, dtype="<f4")
    expected = int(np.prod(shape))
    if data.size != expected or os.path.getsize(fname) != 4 * expected:
        raise BundleFormatError(
            f"{fname}: length mismatch, header implies {expected} values, found {data.size}"
        )
    if not np.all(np.isfinite(data)):
        raise BundleFormatError(f"{fname}: non-finite values")
    return Raster(data.reshape(shape).astype(np.float32), units)


def read_bundle(path) -> PatchRecord:
    path = Path(path)
    meta_file = path / "meta.json"
    if not meta_file.is_file():
        raise BundleFormatError(f"{meta_file}: missing")
    try:
        with open(meta_file, encoding="utf-8") as f:
            meta = json.load(f)
        rid, alpha, H, W, C = meta["id"], int(meta["alpha"]), int(meta["H"]), int(meta["W"]), int(meta["guide_channels"])
    except (KeyError, ValueError, TypeError) as e:
        raise BundleFormatError(f"{meta_file}: bad header ({e})") from e
    if meta.get("dtype", "f32") != "f32" or meta.get("byte_order", "little") != "little":
        raise BundleFormatError(f"{meta_file}: only little-endian f32 payloads are supported")
    if alpha < 1 or H % alpha or W % alpha:
        raise DimensionError(f"{meta_file}: H={H} and W={W} must both be divisible by alpha={alpha}")
    units = meta.get("units", {})
    shapes = {"guide": (C, H, W), "target": (1, H, W), "source": (1, H // alpha, W // alpha)}
    parts = {n: _read_payload(path, n, shapes[n], units.get(n, "")) for n in _PAYLOADS}
    return PatchRecord(rid, alpha=alpha, **parts)


def list_bundles(root) -> list[Path]:
    """Bundle directories directly under ``root``, sorted by name."""
    root = Path(root)
    return sorted(p for p in root.iterdir() if (p / "meta.json").is_file())


# -- prediction bundles: <dir>/meta.json + prediction.bin (1 x H x W) -------

def write_prediction(pred, path, id: str = "", units: str = "") -> None:
    m = np.asarray(as_map(pred), dtype="<f4")
    if not np.all(np.isfinite(m)):
        raise ValueError("prediction contains non-finite values")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    m.tofile(path / "prediction.bin")
    meta = {"id": id, "H": m.shape[0], "W": m.shape[1], "dtype": "f32", "byte_order": "little",
            "layout": "CHW planar", "units": units}
    with open(path / "meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


def read_prediction(path) -> np.ndarray:
    """Read a prediction bundle as an H x W float32 array.

    Raises FileNotFoundError when the bundle directory does not exist.
    """
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(path)
    meta_file = path / "meta.json"
    if not meta_file.is_file():
        raise BundleFormatError(f"{meta_file}: missing")
    with open(meta_file, encoding="utf-8") as f:
        meta = json.load(f)
    try:
        H, W = int(meta["H"]), int(meta["W"])
    except (KeyError, ValueError, TypeError) as e:
        raise BundleFormatError(f"{meta_file}: bad header ({e})") from e
    return _read_payload(path, "prediction", (1, H, W), "").values[0]
