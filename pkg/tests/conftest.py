import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def pmfs(draw, size=None, min_size=2, max_size=5, positive=False):
    k = size if size is not None else draw(st.integers(min_size, max_size))
    lo = 1e-3 if positive else 0.0
    raw = draw(st.lists(st.floats(lo, 1.0), min_size=k, max_size=k).filter(lambda v: sum(v) > 1e-6))
    p = np.asarray(raw, dtype=np.float64)
    p[p < 1e-6] = 0.0  # keep clear of subnormal products
    if p.sum() == 0.0:
        p[0] = 1.0
    return p / p.sum()


@st.composite
def kernels(draw, rows, cols, positive=True):
    return np.stack([draw(pmfs(size=cols, positive=positive)) for _ in range(rows)])


def bern_kl(a, b):
    """Closed-form binary divergence."""
    out = 0.0
    if a > 0:
        out += a * np.log(a / b)
    if a < 1:
        out += (1 - a) * np.log((1 - a) / (1 - b))
    return out


def h2(p):
    """Binary entropy in bits."""
    return -(p * np.log2(p) + (1 - p) * np.log2(1 - p))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
