import numpy as np
import pytest

from tempoproj.dataset import ClassSpec, Dataset, GeneratorSpec, TimeSeries, synth_generate


def make_series(rows, sid=0):
    return TimeSeries(np.asarray(rows, dtype=float), id=sid)


def univariate_dataset(rows, labels=None, k_hint=None, name="test"):
    samples = tuple(make_series([r], sid=i) for i, r in enumerate(rows))
    labels = None if labels is None else np.asarray(labels)
    return Dataset(samples, labels=labels, k_hint=k_hint, name=name)


@pytest.fixture
def bench_spec():
    """The desk-scale three-class benchmark generator."""
    return GeneratorSpec(
        classes=(
            ClassSpec("sine", noise_std=0.1, phase_jitter=0.3),
            ClassSpec("square", noise_std=0.1, phase_jitter=0.3),
            ClassSpec("trend", noise_std=0.1, phase_jitter=0.3),
        ),
        n_per_class=100,
        length=128,
        name="bench3",
    )


@pytest.fixture
def small_spec():
    """A tiny, fast variant of the benchmark generator for unit tests."""
    return GeneratorSpec(
        classes=(
            ClassSpec("sine", noise_std=0.05, phase_jitter=0.2),
            ClassSpec("square", noise_std=0.05, phase_jitter=0.2),
            ClassSpec("trend", noise_std=0.05, phase_jitter=0.2),
        ),
        n_per_class=12,
        length=32,
        name="small3",
    )


@pytest.fixture
def small_dataset(small_spec):
    return synth_generate(small_spec, seed=11)
