import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import bern_kl, h2, kernels, pmfs
from secisac.metrics import (
    azuma_params,
    chernoff,
    conditional_chernoff,
    conditional_kl,
    key_rate,
    kl,
    mgf_exponent,
    mutual_information,
    total_variation,
)
from secisac.probcore import DegenerateModelError, InvalidInputError, bern, bsc, joint, point_mass, uniform


def grid_chernoff(p, q, step=1e-5):
    """Dense-grid oracle: max over lambda of -ln sum p^lam q^(1-lam)."""
    lam = np.arange(0.0, 1.0 + step / 2, step)
    mask = (p > 0) & (q > 0)
    lp, lq = np.log(p[mask]), np.log(q[mask])
    vals = -np.log(np.exp(np.outer(lam, lp) + np.outer(1 - lam, lq)).sum(axis=1))
    return float(vals.max())


def test_kl_examples():
    assert kl(bern(0.1), bern(0.1)) == 0.0
    assert kl(bern(0.1), bern(0.15)) == pytest.approx(0.010896, abs=5e-7)
    assert abs(kl(bern(0.1), bern(0.15)) - bern_kl(0.1, 0.15)) < 1e-15
    assert kl(bern(0.5), point_mass(0, 2)) == math.inf
    with pytest.raises(InvalidInputError):
        kl(uniform(2), uniform(3))


def test_conditional_kl_examples():
    w = bsc(0.2)
    assert conditional_kl(w, w, [0.3, 0.7]) == 0.0
    ref = bern_kl(0.1, 0.15)
    assert abs(conditional_kl(bsc(0.1), bsc(0.15), uniform(2)) - ref) < 1e-15
    assert abs(conditional_kl(bsc(0.1), bsc(0.15), point_mass(0, 2)) - ref) < 1e-15


def test_chernoff_examples():
    v, _ = chernoff([0.2, 0.8], [0.2, 0.8])
    assert v == 0.0
    p, q = bern(0.06), bern(0.03)
    v, lam = chernoff(p, q)
    assert abs(v - grid_chernoff(p, q)) <= 1e-9
    assert 0.0 <= lam <= 1.0
    assert chernoff(point_mass(0, 2), point_mass(1, 2))[0] == math.inf


def test_conditional_chernoff_examples():
    w = bsc(0.3)
    assert conditional_chernoff(w, w, uniform(2)) == 0.0
    ref = grid_chernoff(bern(0.06), bern(0.03))
    assert abs(conditional_chernoff(bsc(0.06), bsc(0.03), uniform(2)) - ref) <= 1e-9
    ref1 = grid_chernoff(np.array([0.1, 0.9]), np.array([0.15, 0.85]))
    assert abs(conditional_chernoff(bsc(0.1), bsc(0.15), point_mass(1, 2)) - ref1) <= 1e-9


def test_mutual_information_examples():
    assert abs(mutual_information(uniform(2), np.eye(2)) - math.log(2)) < 1e-15
    assert abs(mutual_information(uniform(2), bsc(0.1)) - (1 - h2(0.1)) * math.log(2)) < 1e-12
    assert abs(mutual_information([0.3, 0.7], [[0.4, 0.6], [0.4, 0.6]])) < 1e-15


def test_key_rate_examples():
    # deterministic joint: (y1, y2) = (x, x)
    det = np.zeros((2, 4))
    det[0, 0] = det[1, 3] = 1.0
    assert key_rate(uniform(2), det, 2, 2) == 0.0
    indep = (bsc(0.1)[:, :, None] * bsc(0.06)[:, None, :]).reshape(2, 4)
    assert abs(key_rate(uniform(2), indep, 2, 2) - h2(0.1) * math.log(2)) < 1e-12
    # Y1 = Y2 almost surely, each a noisy copy of X
    same = np.zeros((2, 4))
    same[:, 0], same[:, 3] = bsc(0.1)[:, 0], bsc(0.1)[:, 1]
    assert key_rate(uniform(2), same, 2, 2) == 0.0


def test_total_variation_examples():
    assert total_variation([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert total_variation(point_mass(0, 2), point_mass(1, 2)) == 1.0
    assert total_variation(bern(0.1), bern(0.15)) == pytest.approx(0.05, abs=1e-15)


def test_mgf_exponent_against_grid():
    p, w1, w2 = uniform(2), bsc(0.1), bsc(0.15)
    c0, lam = mgf_exponent(p, w1, w2)
    grid = np.arange(-20.0, 0.0, 1e-4)
    terms = p[:, None, None] * w1[:, :, None] * (w1 / w2)[:, :, None] ** grid
    oracle = float((-np.log(terms.sum(axis=(0, 1)))).max())
    assert c0 > 0
    assert abs(c0 - oracle) < 1e-8
    assert lam < 0
    with pytest.raises(DegenerateModelError):
        mgf_exponent(p, w1, w1)


def test_azuma_params_by_enumeration():
    p, w1, w2 = uniform(2), bsc(0.1), bsc(0.15)
    d = bern_kl(0.1, 0.15)
    pairs = [(x, y) for x in range(2) for y in range(2)]
    phi_ref = max(abs(math.log(w1[x, y] / w2[x, y]) - d) for x, y in pairs)
    phi, psi = azuma_params(p, w1, w2, 0.1, 0.2 * d)
    assert abs(phi - phi_ref) < 1e-14
    assert abs(psi - (0.2 * d - 0.1 * d)) < 1e-15
    phi0, _ = azuma_params(p, w1, w1, 0.1, 0.0)
    assert phi0 == 0.0
    with pytest.raises(DegenerateModelError):
        azuma_params(p, np.eye(2), w2, 0.1, 0.0)


# -- properties ------------------------------------------------------------------


@given(pmfs(min_size=2, max_size=5), st.data())
def test_kl_nonnegative_and_zero_iff_equal(p, data):
    q = data.draw(pmfs(size=p.size, positive=True))
    v = kl(p, q)
    assert v >= 0.0
    if np.max(np.abs(p - q)) > 1e-6:
        assert v > 0.0
    assert kl(q, q) == 0.0


@given(pmfs(positive=True), st.data())
def test_chernoff_below_both_divergences(p, data):
    q = data.draw(pmfs(size=p.size, positive=True))
    c, _ = chernoff(p, q)
    assert c <= min(kl(p, q), kl(q, p)) + 1e-12
    assert c >= 0.0


@given(st.data())
def test_conditional_chernoff_point_mass_reduces_to_rows(data):
    nx = data.draw(st.integers(2, 4))
    ny = data.draw(st.integers(2, 4))
    w1 = data.draw(kernels(nx, ny))
    w2 = data.draw(kernels(nx, ny))
    x = data.draw(st.integers(0, nx - 1))
    assert abs(conditional_chernoff(w1, w2, point_mass(x, nx)) - chernoff(w1[x], w2[x])[0]) <= 1e-10


@given(st.data())
def test_mutual_information_is_divergence_from_product(data):
    p = data.draw(pmfs())
    ny = data.draw(st.integers(2, 4))
    w = data.draw(kernels(p.size, ny, positive=False))
    j = joint(p, w)
    prod = np.outer(p, p @ w).reshape(-1)
    assert abs(mutual_information(p, w) - kl(j, prod)) <= 1e-10


@given(st.data())
def test_mgf_exponent_positive(data):
    nx = data.draw(st.integers(1, 3))
    ny = data.draw(st.integers(2, 3))
    w1 = data.draw(kernels(nx, ny))
    w2 = data.draw(kernels(nx, ny))
    p = data.draw(pmfs(size=nx, positive=True))
    assume(conditional_kl(w1, w2, p) > 1e-6)
    c0, _ = mgf_exponent(p, w1, w2)
    assert c0 > 0.0
