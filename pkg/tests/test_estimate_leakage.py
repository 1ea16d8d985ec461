import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secisac.chanfam import table1_preset
from secisac.metrics import azuma_params, conditional_kl
from secisac.probcore import InvalidInputError, Seed, bsc, uniform
from secisac.protosim import SimConfig, default_policy, simulate
from secisac.protosim.estimate import azuma_curve, estimate_exponents, fit_exponent, stopping_tail
from secisac.protosim.leakage import TinyLeakageConfig, estimate_leakage, leakage_monte_carlo

FAM = table1_preset()
D0 = conditional_kl(FAM.w1[0], FAM.w1[1], uniform(2))


def test_fit_exact_log_linear():
    ns = np.array([100, 200, 300, 400])
    fit = fit_exponent(ns, np.exp(-0.01 * ns))
    assert abs(fit.slope - 0.01) < 1e-12
    assert "non_exponential_decay" not in fit.flags


def test_fit_constant_is_flagged():
    fit = fit_exponent([100, 200, 300], [0.2, 0.2, 0.2])
    assert abs(fit.slope) < 1e-15
    assert "non_exponential_decay" in fit.flags


def test_fit_estimability_floor():
    fit = fit_exponent([100, 200, 300, 400], [1e-2, 1e-3, 1e-4, 1e-5], trials=10**5)
    assert "below_estimability_floor" in fit.flags
    assert fit.used == (True, True, False, False)  # 1e5 * 1e-4 = 10 errors
    few = fit_exponent([100, 200], [1e-2, 1e-3], trials=10**5)
    assert "fewer_than_3_points" in few.flags


def test_fit_bootstrap_interval_covers_truth():
    ns = np.array([200, 400, 600, 800])
    fit = fit_exponent(ns, np.exp(-0.01 * ns - 1.0), trials=10**6)
    assert fit.ci_low < 0.01 < fit.ci_high
    assert fit.ok


def test_estimate_exponents_on_reports():
    reps = [simulate(SimConfig(n=n, epsilon=0.2 * D0, family=FAM, policy=default_policy(FAM), trials=4000, seed=Seed(2))) for n in (100, 200)]
    est = estimate_exponents(reps, resamples=200)
    assert est.d1.ns == (100.0, 200.0)
    assert "fewer_than_3_points" in est.d1.flags


def test_immediate_stop_tail():
    c = SimConfig(n=400, epsilon=10.0, family=FAM, policy=default_policy(FAM), trials=500, seed=Seed(0))
    tail = stopping_tail(simulate(c))
    assert tail.empirical[0] == 0.0
    assert tail.p_tau_at_most(c.block_len) == 1.0


def test_azuma_curve_uses_params():
    c = SimConfig(n=400, epsilon=0.2 * D0, family=FAM, policy=default_policy(FAM), trials=1, seed=Seed(0))
    phi, _ = azuma_params(uniform(2), FAM.w1[0], FAM.w1[1], c.delta, c.epsilon)
    t = 2000.0
    gap = (1 - c.delta) * D0 * t - 400 * (D0 - c.epsilon)
    assert abs(azuma_curve(c, [t])[0] - math.exp(-gap**2 / (2 * t * phi**2))) < 1e-15
    assert azuma_curve(c, [20.0])[0] == 1.0


def test_table1_tail_below_azuma():
    c = SimConfig(n=400, epsilon=0.2 * D0, family=FAM, policy=default_policy(FAM), trials=20000, seed=Seed(3))
    tail = stopping_tail(simulate(c), safety=1.0)
    assert tail.estimable.any()
    assert tail.within_bound and tail.strictly_decreasing


# -- leakage -----------------------------------------------------------------------


@settings(max_examples=25)
@given(st.floats(0.01, 0.49), st.integers(1, 2), st.integers(0, 1), st.integers(2, 6), st.integers(0, 1000))
def test_full_pad_leaks_nothing(a, bits, local, length, seed):
    cfg = TinyLeakageConfig(bsc(a), message_bits=bits, key_bits=bits, local_bits=local, block_len=length, seed=Seed(seed))
    assert estimate_leakage(cfg) <= 1e-12


def test_no_key_noiseless_discloses_message():
    cfg = TinyLeakageConfig(np.eye(2), message_bits=2, key_bits=0, block_len=6)
    assert abs(estimate_leakage(cfg) - 2 * math.log(2)) < 1e-12
    two = TinyLeakageConfig(np.eye(2), message_bits=1, block_len=4, blocks=2)
    assert abs(estimate_leakage(two) - 2 * math.log(2)) < 1e-12


def test_half_key_is_intermediate_and_matches_monte_carlo():
    cfg = TinyLeakageConfig(bsc(0.1), message_bits=2, key_bits=1, block_len=8, seed=Seed(9))
    exact = estimate_leakage(cfg)
    assert 0.0 < exact < 2 * math.log(2)
    mean, se = leakage_monte_carlo(cfg, 200000, Seed(10))
    assert abs(mean - exact) <= 3 * se


def test_enumeration_limit():
    with pytest.raises(InvalidInputError):
        TinyLeakageConfig(bsc(0.1), message_bits=2, key_bits=2, local_bits=4, block_len=8, blocks=4)
