import numpy as np
import pytest

from qiforest.datasets import Dataset


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in ("QIFOREST_CONFIG", "QIFOREST_N_JOBS", "LOG_LEVEL", "ENABLE_JSON_LOGGING"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def linear_dataset(n=120, m=6, seed=7, noise=0.1, name="linear"):
    """Correlated Gaussian design with a dense linear target."""
    gen = np.random.default_rng(seed)
    scales = 0.6 ** np.arange(m)
    mixing, _ = np.linalg.qr(gen.standard_normal((m, m)))
    x = (gen.standard_normal((n, m)) * scales) @ mixing.T
    y = x @ gen.standard_normal(m) + noise * gen.standard_normal(n)
    return Dataset(name=name, x=x, y=y)


@pytest.fixture
def small_dataset():
    return linear_dataset()
