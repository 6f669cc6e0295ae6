"""Benchmark runs: config, method dispatch, scoring and report files."""

from __future__ import annotations

import csv
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import METHODS, make_upsampler
from .interp import KEYS_A
from .metrics import DEFAULT_PEAK, SSIM_SIGMA, SSIM_WINDOW, evaluate, residual_bins, throughput
from .raster import BundleFormatError, list_bundles, read_bundle, read_prediction, split_dataset
from .spectrum import _is_pow2, aggregate_profiles, map_profile
from .synth import SynthParams, gen_dataset

log = logging.getLogger(__name__)

RESULT_COLUMNS = ["method", "sample_id", "mae", "rmse", "psnr", "ssim", "peak_used"]
BIN_COLUMNS = ["method", "bin_lo", "bin_hi", "count", "q1", "median", "q3", "mean"]
SPECTRUM_COLUMNS = ["method", "radius", "mean_mag", "std", "count"]
AGGREGATE_ID = "mean"

_PARAM_ALIASES = {"p2p": {"lambda": "lam"}}


class ConfigError(ValueError):
    pass


def _expand_dotted(d: dict) -> dict:
    out: dict = {}
    for k, v in d.items():
        if isinstance(k, str) and "." in k:
            head, tail = k.split(".", 1)
            out.setdefault(head, {}).update(_expand_dotted({tail: v}))
        elif isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k].update(v)
        else:
            out[k] = v
    return out


@dataclass
class BenchConfig:
    methods: list
    dataset: dict
    alpha: int = 8
    params: dict = field(default_factory=dict)
    split: dict | None = None
    peak: float = DEFAULT_PEAK
    residual_bin_edges: list | None = None
    residual_samples: int = 10000
    residual_seed: int = 0
    throughput_repeats: int = 3
    output_dir: str = "bench_out"
    spectrum: bool = True

    @classmethod
    def from_dict(cls, raw: dict, base_dir=None) -> "BenchConfig":
        d = _expand_dotted(dict(raw))
        params = dict(d.pop("params", {}) or {})
        for name in METHODS:
            if isinstance(d.get(name), dict):
                params.setdefault(name, {}).update(d.pop(name))
        metrics = d.pop("metrics", {}) or {}
        for key, dest in (("peak", "peak"), ("residual_bin_edges", "residual_bin_edges"),
                          ("residual_samples", "residual_samples"), ("residual_seed", "residual_seed")):
            if key in metrics:
                d[dest] = metrics[key]
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "methods" not in d or "dataset" not in d:
            raise ConfigError("config needs 'methods' and 'dataset'")
        cfg = cls(params=params, **d)
        if base_dir is not None and "path" in cfg.dataset:
            p = Path(cfg.dataset["path"])
            if not p.is_absolute():
                cfg.dataset = {**cfg.dataset, "path": str(Path(base_dir) / p)}
        if base_dir is not None and not Path(cfg.output_dir).is_absolute():
            cfg.output_dir = str(Path(base_dir) / cfg.output_dir)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "BenchConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f), base_dir=path.parent)

    def validate(self):
        if not self.methods:
            raise ConfigError("methods must be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {', '.join(bad)}; valid: {', '.join(METHODS)}")
        if int(self.alpha) < 1:
            raise ConfigError("alpha must be >= 1")
        if self.peak <= 0:
            raise ConfigError("peak must be positive")
        if ("path" in self.dataset) == ("synth" in self.dataset):
            raise ConfigError("dataset needs exactly one of 'path' or 'synth'")

    def method_params(self, name: str) -> dict:
        raw = dict(self.params.get(name, {}))
        aliases = _PARAM_ALIASES.get(name, {})
        return {aliases.get(k, k): v for k, v in raw.items()}


def load_records(config: BenchConfig) -> list:
    if "path" in config.dataset:
        root = Path(config.dataset["path"])
        if not root.is_dir():
            raise ConfigError(f"dataset path {root} does not exist")
        records = [read_bundle(p) for p in list_bundles(root)]
    else:
        sp = dict(config.dataset["synth"])
        count = int(sp.pop("count", 5))
        sp.setdefault("alpha", config.alpha)
        for key in ("value_range", "noise_sigma_per_channel", "mix_a", "mix_b"):
            if isinstance(sp.get(key), list):
                sp[key] = tuple(sp[key])
        records = gen_dataset(SynthParams(**sp), count)
    for r in records:
        if r.alpha != config.alpha:
            raise ConfigError(f"record {r.id} has alpha={r.alpha}, config alpha={config.alpha}")
    return records


def select_eval_records(records, config: BenchConfig):
    if not config.split:
        return records
    split = split_dataset([r.id for r in records], config.split.get("ratios", (0.6, 0.2, 0.2)),
                          int(config.split.get("seed", 0)))
    by_id = {r.id: r for r in records}
    return [by_id[i] for i in sorted(split.test_ids)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".10g")


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) if not isinstance(row[c], str) else row[c] for c in columns])


def _default_edges(refs, n_bins=10):
    lo = min(float(np.min(r)) for r in refs)
    hi = max(float(np.max(r)) for r in refs)
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n_bins + 1).tolist()


@dataclass
class BenchResult:
    rows: list
    aggregates: list
    failures: list
    skipped: list
    throughput: dict
    exit_code: int
    output_dir: Path


class _Report:
    """Accumulates per-sample scores and writes the report files."""

    def __init__(self, config: BenchConfig, records):
        self.config = config
        self.records = records
        self.rows = []
        self.failures = []
        self.preds: dict = {}

    def score(self, method, record, pred):
        rep = evaluate(pred, record.target, self.config.peak)
        self.rows.append({"method": method, "sample_id": record.id, **rep.as_dict()})
        self.preds.setdefault(method, []).append((record, np.asarray(pred, dtype=np.float64)))

    def aggregates(self, methods):
        out = []
        for m in methods:
            mine = [r for r in self.rows if r["method"] == m]
            if not mine:
                continue
            agg = {"method": m, "sample_id": AGGREGATE_ID, "peak_used": self.config.peak}
            for k in ("mae", "rmse", "psnr", "ssim"):
                agg[k] = float(np.mean([r[k] for r in mine]))
            out.append(agg)
        return out

    def write(self, methods, extra_manifest: dict, skipped=()):
        cfg = self.config
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        aggs = self.aggregates(methods)
        _write_csv(out / "results.csv", RESULT_COLUMNS, self.rows + aggs)

        refs = [r.target.values[0] for r in self.records]
        edges = cfg.residual_bin_edges or (_default_edges(refs) if refs else [0.0, 1.0])
        bin_rows = []
        for m in methods:
            pairs = self.preds.get(m, [])
            if not pairs:
                continue
            rb = residual_bins([p for _, p in pairs], [r.target.values[0] for r, _ in pairs], edges,
                               cfg.residual_samples, cfg.residual_seed)
            for b in rb.bins:
                bin_rows.append({"method": m, "bin_lo": b.lo, "bin_hi": b.hi, "count": b.count,
                                 "q1": b.q1, "median": b.median, "q3": b.q3, "mean": b.mean})
        _write_csv(out / "residual_bins.csv", BIN_COLUMNS, bin_rows)

        spectrum_note = None
        if cfg.spectrum and self.records:
            H, W = self.records[0].height, self.records[0].width
            if _is_pow2(H) and _is_pow2(W):
                spec_rows = []
                series = [("target", [r.target.values[0] for r in self.records])]
                series += [(m, [p for _, p in self.preds.get(m, [])]) for m in methods]
                for name, maps in series:
                    if not maps:
                        continue
                    agg = aggregate_profiles(map_profile(x) for x in maps)
                    for i, rad in enumerate(agg.radii):
                        spec_rows.append({"method": name, "radius": int(rad), "mean_mag": agg.mean_magnitude[i],
                                          "std": agg.std[i], "count": int(agg.count[i])})
                _write_csv(out / "spectrum.csv", SPECTRUM_COLUMNS, spec_rows)
            else:
                spectrum_note = f"skipped: {H}x{W} is not a power-of-two size"

        manifest = {
            "version": __version__,
            "config": asdict(cfg),
            "n_evaluated": len(self.records),
            "evaluated_ids": [r.id for r in self.records],
            "failures": self.failures,
            "skipped": list(skipped),
            "conventions": {
                "bicubic_keys_a": KEYS_A,
                "ssim": f"gaussian {SSIM_WINDOW}x{SSIM_WINDOW} sigma={SSIM_SIGMA}, valid windows only",
                "coordinates": "pixel centers, lr = (hr + 0.5) / alpha - 0.5, edge clamp",
                "throughput_scope": "inference only, records preloaded in memory, single stream, "
                                    "median over repeats after one untimed pass",
                "p2p_features": "z-scored guide bands + pixel-center coordinates",
            },
            "spectrum": spectrum_note or "ok",
            "platform": platform.platform(),
            **extra_manifest,
        }
        with open(out / "manifest.json", "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, default=str)
            f.write("\n")
        return aggs


def _write_curve(path: Path, curve):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iteration", "loss"])
        for i, v in enumerate(curve):
            w.writerow([i, _fmt(v)])


def run_benchmark(config: BenchConfig) -> BenchResult:
    t_start = time.time()
    records = select_eval_records(load_records(config), config)
    report = _Report(config, records)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tput = {}
    for name in config.methods:
        est = make_upsampler(name, config.alpha, **config.method_params(name))
        est.fit([r.source.values[0] for r in records], [r.guide.values for r in records])
        for rec in records:
            try:
                pred = est.predict(rec.source.values[0], rec.guide.values)
                report.score(name, rec, pred)
            except Exception as e:  # noqa: BLE001 - any per-sample failure is recorded, run continues
                log.error("%s failed on %s: %s", name, rec.id, e)
                report.failures.append({"method": name, "sample_id": rec.id, "error": f"{type(e).__name__}: {e}"})
                continue
            if name == "p2p":
                curves = out / "p2p_curves"
                curves.mkdir(exist_ok=True)
                _write_curve(curves / f"{rec.id}.csv", est.diagnostics_.loss_curve)
        if config.throughput_repeats > 0 and records:
            try:
                tput[name] = throughput(est.predict, records, config.throughput_repeats)
            except Exception as e:  # noqa: BLE001
                report.failures.append({"method": name, "sample_id": "throughput", "error": str(e)})
    aggs = report.write(config.methods, {
        "throughput_mpix_s": tput,
        "wall_seconds": time.time() - t_start,
        "method_params": {m: make_upsampler(m, config.alpha, **config.method_params(m)).get_params()
                          for m in config.methods},
    })
    code = 1 if report.failures else 0
    return BenchResult(report.rows, aggs, report.failures, [], tput, code, out)


def score_external(pred_dir, config: BenchConfig, name: str = "external") -> BenchResult:
    """Score prediction bundles in ``pred_dir`` (one per evaluated id) without running any upsampler."""
    pred_dir = Path(pred_dir)
    records = select_eval_records(load_records(config), config)
    report = _Report(config, records)
    skipped = []
    for rec in records:
        try:
            pred = read_prediction(pred_dir / rec.id)
        except FileNotFoundError:
            skipped.append({"sample_id": rec.id, "reason": "missing prediction"})
            continue
        except BundleFormatError as e:
            skipped.append({"sample_id": rec.id, "reason": str(e)})
            continue
        if pred.shape != (rec.height, rec.width):
            skipped.append({"sample_id": rec.id,
                            "reason": f"prediction is {pred.shape}, target is {(rec.height, rec.width)}"})
            continue
        report.score(name, rec, pred)
    for s in skipped:
        log.warning("skipped %s: %s", s["sample_id"], s["reason"])
    aggs = report.write([name], {"scored_predictions": str(pred_dir)}, skipped)
    return BenchResult(report.rows, aggs, [], skipped, {}, 1 if skipped else 0, Path(config.output_dir))
