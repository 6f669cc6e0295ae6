from dataclasses import replace

import numpy as np
import pytest

from gsrbio.interp import upsample_bicubic, upsample_nearest
from gsrbio.metrics import psnr
from gsrbio.raster import downsample_avg
from gsrbio.synth import SynthParams, binomial_kernel, gen_dataset, gen_sample


def test_degenerate_guide_equals_target():
    p = SynthParams(seed=3, guide_channels=3, noise_sigma_per_channel=(0.0, 0.0, 0.0),
                    mix_a=(1.0, 0.5, 0.5), mix_b=(0.0, 0.0, 0.0), value_range=(0.0, 1.0))
    rec = gen_sample(p)
    np.testing.assert_array_equal(rec.guide.values[0], rec.target.values[0])


def test_edge_aligned_channel_zero():
    rec = gen_sample(SynthParams(seed=1, edge_aligned=True, value_range=(0.0, 1.0)))
    np.testing.assert_array_equal(rec.guide.values[0], rec.target.values[0])


def test_deterministic():
    p = SynthParams(seed=11, height=32, width=32, alpha=4)
    a, b = gen_sample(p), gen_sample(p)
    assert a.guide == b.guide and a.target == b.target and a.source == b.source


def test_source_is_pooled_target():
    for rec in gen_dataset(SynthParams(seed=2, height=32, width=64, alpha=8), 4):
        np.testing.assert_array_equal(rec.source.values[0], downsample_avg(rec.target.values[0], 8))


def test_value_range():
    p = SynthParams(seed=5, value_range=(10.0, 20.0), texture_gain=3.0)
    for rec in gen_dataset(p, 5):
        t = rec.target.values
        assert t.min() >= 10.0 and t.max() <= 20.0


def test_smooth_target_favours_bicubic():
    p = SynthParams(seed=100, texture_gain=0.0)
    for rec in gen_dataset(p, 20):
        S, Y = rec.source.values[0], rec.target.values[0]
        peak = float(Y.max())
        assert psnr(upsample_bicubic(S, 8), Y, peak) >= psnr(upsample_nearest(S, 8), Y, peak)


def test_dataset_naming():
    assert gen_dataset(SynthParams(), 0) == []
    recs = gen_dataset(SynthParams(height=16, width=16, alpha=4), 3)
    assert [r.id for r in recs] == ["synth-0000", "synth-0001", "synth-0002"]


def test_histograms_differ_across_seeds():
    recs = gen_dataset(SynthParams(seed=0), 20)
    edges = np.linspace(0, 400, 21)
    hists = [np.histogram(r.target.values, bins=edges)[0] + 1.0 for r in recs]
    for i in range(len(hists) - 1):
        a, b = hists[i], hists[i + 1]
        chi2 = np.sum((a - b) ** 2 / (a + b))
        assert chi2 > 0


def test_binomial_kernel():
    np.testing.assert_allclose(binomial_kernel(1), [0.25, 0.5, 0.25])
    assert binomial_kernel(5).sum() == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [
    dict(height=30, alpha=8),
    dict(value_range=(1.0, 1.0)),
    dict(guide_channels=2, noise_sigma_per_channel=(0.1, -0.1)),
])
def test_invalid_params(bad):
    with pytest.raises(ValueError):
        replace(SynthParams(), **bad)
