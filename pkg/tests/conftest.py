import pytest

from loadfill.samples import generate_samples
from loadfill.synth import SynthConfig, synth_series


@pytest.fixture(scope="session")
def short_series():
    return synth_series(SynthConfig(days=10, resolution=15, n_users=20, seed=7))


@pytest.fixture(scope="session")
def small_sample_set(short_series):
    return generate_samples(short_series, (1.0, 4.0), seed=3)
