import numpy as np
import pytest

from gsrbio.raster import PatchRecord, Raster, downsample_avg
from gsrbio.synth import SynthParams, gen_dataset


def make_record(target, guide, alpha, id="rec"):
    target = np.asarray(target, dtype=np.float32)
    return PatchRecord(id, Raster(guide), Raster(target), Raster(downsample_avg(target, alpha)), alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_records():
    return gen_dataset(SynthParams(seed=7, height=32, width=32, alpha=4, guide_channels=4), 5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
