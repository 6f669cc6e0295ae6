"""End-to-end acceptance criteria.

Each test records one PASS/FAIL line; the lines are printed in pytest's
terminal summary (see conftest.py) and immediately when run with ``-s``.
Run standalone with ``python tests/test_acceptance.py``.
"""

import json
import time

import numpy as np
import pytest

from gsrbio.bench import BenchConfig, run_benchmark
from gsrbio.cli import main
from gsrbio.interp import upsample_bicubic, upsample_bilinear, upsample_nearest
from gsrbio.jbu import jbu_upsample
from gsrbio.metrics import DEFAULT_PEAK, mae, psnr, psnr_from_rmse, rmse, ssim
from gsrbio.p2p import P2pConfig, net_init, p2p_fit_predict, p2p_grad, p2p_loss
from gsrbio.raster import PatchRecord, Raster, downsample_avg
from gsrbio.spectrum import fft2d, map_profile
from gsrbio.synth import SynthParams, gen_dataset, gen_sample

RESULTS = {}

# reported (name, RMSE t/px, PSNR dB) pairs for ten biomass super-resolution methods
REPORTED_ROWS = [
    ("MSG", 29.8, 50.8), ("FDSR", 33.4, 49.8), ("P2P", 46.3, 47.0), ("JBU", 42.6, 47.7),
    ("MSGng", 37.8, 48.7), ("Nearest", 42.6, 47.7), ("Bilinear", 41.1, 48.0),
    ("Bicubic", 39.5, 48.4), ("U-Net", 37.6, 48.8), ("ResNeXt", 39.0, 48.4),
]


def report(num, title, ok, detail, started):
    line = f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail} ({time.perf_counter() - started:.1f}s)"
    RESULTS[num] = line
    print(line)
    return ok


def _record(target, guide, alpha, id="rec"):
    target = np.asarray(target, dtype=np.float32)
    return PatchRecord(id, Raster(guide), Raster(target), Raster(downsample_avg(target, alpha)), alpha)


def test_reported_peak_consistency():
    t0 = time.perf_counter()
    peaks = np.array([r * 10 ** (p / 20) for _, r, p in REPORTED_ROWS])
    mean_peak = peaks.mean()
    spread = np.max(np.abs(peaks - mean_peak)) / mean_peak
    worst = max(abs(psnr_from_rmse(r, mean_peak) - p) for _, r, p in REPORTED_ROWS)
    ok = spread <= 0.015 and worst <= 0.1
    report(1, "reported PSNR/RMSE peak consistency", ok,
           f"mean peak {mean_peak:.1f} (default {DEFAULT_PEAK}), spread {100 * spread:.2f}%, "
           f"worst PSNR error {worst:.3f} dB", t0)
    assert ok
    assert abs(mean_peak - DEFAULT_PEAK) / DEFAULT_PEAK < 0.005


def test_p2p_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    rec = _record(rng.uniform(0, 5, (8, 8)), rng.standard_normal((1, 8, 8)), 2)
    net = net_init([3, 4, 1], seed=0)
    cfg = P2pConfig(lam=1e-2)
    analytic = p2p_grad(net, rec, cfg).flat()
    theta, eps = net.flat(), 1e-4
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = eps
        numeric[i] = (p2p_loss(net.with_flat(theta + e), rec, cfg)
                      - p2p_loss(net.with_flat(theta - e), rec, cfg)) / (2 * eps)
    err = float(np.max(np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)))
    ok = err <= 1e-3
    report(2, "P2P gradient vs central differences", ok, f"{theta.size} params, max rel err {err:.2e}", t0)
    assert ok


@pytest.mark.slow
def test_p2p_pooled_consistency():
    t0 = time.perf_counter()
    records = gen_dataset(SynthParams(seed=100, height=64, width=64, alpha=8), 10)
    ratios = []
    for rec in records:
        pred, _ = p2p_fit_predict(rec)
        s = rec.source.values[0].astype(np.float64)
        ratios.append(np.mean(np.abs(downsample_avg(pred, rec.alpha) - s)) / s.std())
    n_ok = int(np.sum(np.array(ratios) <= 0.05))
    ok = n_ok >= 9
    report(3, "P2P pooled consistency", ok,
           f"{n_ok}/10 within 5% of std(S), worst {100 * max(ratios):.2f}%", t0)
    assert ok


def test_p2p_linear_recovery():
    t0 = time.perf_counter()
    g = gen_sample(SynthParams(seed=5, height=64, width=64, alpha=8, guide_channels=1,
                               noise_sigma_per_channel=(0.0,))).guide.values
    y = 250.0 * g[0].astype(np.float64) + 40.0
    rec = _record(y, g, 8)
    pred, diag = p2p_fit_predict(rec)
    target = rec.target.values[0]
    value = psnr(pred, target, peak=float(target.max()))
    ok = value >= 40.0
    report(4, "P2P linear recovery", ok, f"PSNR {value:.1f} dB after {diag.iterations} iterations", t0)
    assert ok


def test_guided_gain():
    t0 = time.perf_counter()
    records = gen_dataset(SynthParams(seed=200, height=64, width=64, alpha=8, edge_aligned=True), 20)
    pj, pc = [], []
    for rec in records:
        s, t = rec.source.values[0], rec.target.values[0]
        pj.append(psnr(jbu_upsample(s, rec.guide.values, alpha=rec.alpha), t))
        pc.append(psnr(upsample_bicubic(s, rec.alpha), t))
    gain = float(np.median(pj) - np.median(pc))
    ok = gain >= 0.5
    report(5, "JBU guided gain over bicubic", ok, f"median gain {gain:.2f} dB", t0)
    assert ok


def test_interpolation_ordering():
    t0 = time.perf_counter()
    records = gen_dataset(SynthParams(seed=300, height=64, width=64, alpha=8, texture_gain=0.0), 20)
    med = {}
    for name, fn in (("nearest", upsample_nearest), ("bilinear", upsample_bilinear), ("bicubic", upsample_bicubic)):
        med[name] = float(np.median([psnr(fn(r.source.values[0], r.alpha), r.target.values[0]) for r in records]))
    ok = med["bicubic"] >= med["bilinear"] >= med["nearest"]
    report(6, "interpolation ordering on smooth maps", ok,
           ", ".join(f"{k} {v:.2f} dB" for k, v in med.items()), t0)
    assert ok


def test_spectrum_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        x = rng.standard_normal((64, 64))
        F = fft2d(x)
        worst = max(worst, abs(np.sum(np.abs(F) ** 2) / (x.size * np.sum(x ** 2)) - 1))
    parseval = worst <= 1e-6

    i = np.arange(64)
    cos = np.cos(2 * np.pi * 8 * i / 64)[None, :] * np.ones((64, 1))
    prof = map_profile(cos).mean_magnitude
    peak_bin = int(np.argmax(prof[1:]) + 1)
    cosine = peak_bin == 8

    alpha, n = 8, 8
    N = n * alpha
    u = np.fft.fftfreq(N, 1.0 / N)
    r = np.sqrt(u[:, None] ** 2 + u[None, :] ** 2)
    beyond = r > N / (2 * alpha)
    e_near = e_cub = 0.0
    for _ in range(20):
        s = rng.standard_normal((n, n))
        e_near += np.sum(np.abs(fft2d(upsample_nearest(s, alpha))[beyond]) ** 2)
        e_cub += np.sum(np.abs(fft2d(upsample_bicubic(s, alpha))[beyond]) ** 2)
    sinc = e_near > e_cub

    ok = parseval and cosine and sinc
    report(7, "spectrum identities", ok,
           f"Parseval rel err {worst:.1e}, cosine peak bin {peak_bin}, "
           f"energy beyond Nyquist/alpha nearest/bicubic {e_near / e_cub:.2f}", t0)
    assert ok


def test_metric_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    order = all(rmse(a, b) >= mae(a, b) for a, b in
                ((rng.uniform(0, 400, (16, 16)), rng.uniform(0, 400, (16, 16))) for _ in range(100)))
    x = rng.uniform(0, 400, (32, 32))
    self_ssim = ssim(x, x)
    peak = DEFAULT_PEAK
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    m1, m2 = 120.0, 80.0
    closed = (2 * m1 * m2 + c1) / (m1 ** 2 + m2 ** 2 + c1)
    const_err = abs(ssim(np.full((32, 32), m1), np.full((32, 32), m2)) - closed)
    ok = order and self_ssim == 1.0 and const_err <= 1e-9
    report(8, "metric properties", ok,
           f"rmse>=mae on 100 pairs: {order}, ssim(x,x)={self_ssim!r}, constant closed-form err {const_err:.1e}", t0)
    assert ok


@pytest.mark.slow
def test_bench_determinism(tmp_path):
    t0 = time.perf_counter()
    for run in ("a", "b"):
        cfg = {"methods": ["nearest", "bilinear", "bicubic", "jbu", "p2p"],
               "dataset": {"synth": {"seed": 42, "count": 3, "height": 32, "width": 32, "guide_channels": 4}},
               "alpha": 8, "throughput_repeats": 1, "p2p.max_iters": 150, "output_dir": f"out_{run}"}
        path = tmp_path / f"cfg_{run}.json"
        path.write_text(json.dumps(cfg))
        assert main(["bench", "run", "--config", str(path)]) == 0
    a = (tmp_path / "out_a" / "results.csv").read_bytes()
    b = (tmp_path / "out_b" / "results.csv").read_bytes()
    ok = a == b and len(a) > 0
    report(9, "bench run determinism", ok, f"results.csv {len(a)} bytes, identical: {a == b}", t0)
    assert ok


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    for num, fn in enumerate([test_reported_peak_consistency, test_p2p_gradient_check, test_p2p_pooled_consistency,
                              test_p2p_linear_recovery, test_guided_gain, test_interpolation_ordering,
                              test_spectrum_identities, test_metric_properties], start=1):
        try:
            fn()
        except AssertionError:
            failed += 1
    with tempfile.TemporaryDirectory() as d:
        try:
            test_bench_determinism(Path(d))
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
