import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", derandomize=True, max_examples=50)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_table():
    """A tiny in-memory word table: 6 tokens in 4 dimensions."""
    from mvembed.wordvec import WordTable

    rng = np.random.default_rng(99)
    tokens = ["alpha", "beta", "gamma", "delta", "echo", "foxtrot"]
    matrix = rng.normal(size=(len(tokens), 4))
    return WordTable(vocab={t: i for i, t in enumerate(tokens)}, matrix=matrix, dim=4)


def rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-relative disagreement between a gradient and its oracle."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / denom)
