import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bern_kl, h2, kernels
from secisac.chanfam import build_family, table1_preset
from secisac.metrics import chernoff, conditional_chernoff, conditional_kl, mutual_information
from secisac.probcore import InvalidInputError, bsc, point_mass, uniform
from secisac.region import (
    InputPolicy,
    SweepSpec,
    e1_bound,
    e2_bound,
    esc_grid_binary,
    esc_objective,
    label_points,
    mixture_chernoff,
    pareto_indices,
    project_simplex,
    r1_r2_rkey,
    rate_bound,
    region_point,
    resolvability_membership,
    soft_covering_exponent,
    state_rate_bound,
    sweep_boundary,
)

LN2 = math.log(2)
FAM = table1_preset()
Y1 = (0.1, 0.15)
Y2 = (0.06, 0.03)


def uniform_policy(rho=0.0, theta=2):
    return InputPolicy.common(uniform(2), theta, rho)


def closed_form_rates(s):
    """(R1, R2, R_key) in bits for BSCs under uniform input and an independent joint."""
    return 1 - h2(Y1[s]), 1 - h2(Y2[s]), h2(Y1[s])


@pytest.mark.parametrize("s", [0, 1])
def test_rates_match_binary_entropy(s):
    r = r1_r2_rkey(FAM, uniform_policy(), s)
    for got, ref in zip((r.r1, r.r2, r.r_key), closed_form_rates(s)):
        assert abs(got / LN2 - ref) <= 1e-12


def test_key_rate_zero_when_eve_sees_legit_output():
    # Y1 = Y2 almost surely: the joint puts all mass on the diagonal
    w = [bsc(0.1), bsc(0.2)]
    joint = []
    for k in w:
        j = np.zeros((2, 4))
        j[:, 0], j[:, 3] = k[:, 0], k[:, 1]
        joint.append(j)
    fam = build_family(w, w, joint=joint)
    assert r1_r2_rkey(fam, InputPolicy.common([0.3, 0.7], 2), 0).r_key == 0.0


def test_e1_examples():
    ref = bern_kl(0.1, 0.15)
    for p in ([0.5, 0.5], [0.2, 0.8], [1.0, 0.0]):
        assert abs(e1_bound(FAM, InputPolicy.common(p, 2), 0) - ref) < 1e-14


def test_e1_three_states_brute_force(rng):
    w1 = [rng.dirichlet(np.ones(3), size=2) for _ in range(3)]
    w2 = [rng.dirichlet(np.ones(2), size=2) for _ in range(3)]
    fam = build_family(w1, w2)
    pol = InputPolicy(tuple(rng.dirichlet(np.ones(2)) for _ in range(3)))
    for s in range(3):
        ref = min(conditional_kl(fam.w1[s], fam.w1[t], pol.per_state_inputs[s]) for t in range(3) if t != s)
        assert e1_bound(fam, pol, s) == ref


def test_esc_trivial_points():
    p, w = uniform(2), bsc(0.06)
    i = mutual_information(p, w)
    assert soft_covering_exponent(p, w, 0.0).value == 0.0
    assert soft_covering_exponent(p, w, i).value == 0.0
    with pytest.raises(InvalidInputError):
        soft_covering_exponent(p, w, -0.1)


@pytest.mark.parametrize("w", [bsc(0.06), bsc(0.03), bsc(0.1), np.array([[0.8, 0.2], [0.35, 0.65]])])
@pytest.mark.parametrize("factor", [1.2, 1.5, 2.0])
def test_esc_not_above_fine_grid(w, factor):
    p = uniform(2) if w[0, 0] != 0.8 else np.array([0.3, 0.7])
    rate = factor * mutual_information(p, w)
    v = soft_covering_exponent(p, w, rate).value
    grid = esc_grid_binary(p, w, rate, step=0.0005)
    # the solver must not lose to the grid by more than its resolution error
    assert v <= grid + 1e-9
    assert grid - v < 1e-3


@settings(max_examples=25)
@given(st.floats(0.01, 0.45), st.floats(0.05, 0.95), st.floats(0.0, 3.0))
def test_esc_between_zero_and_hinge(a, p0, factor):
    p, w = np.array([p0, 1 - p0]), bsc(a)
    i = mutual_information(p, w)
    rate = factor * i
    res = soft_covering_exponent(p, w, rate, starts=4)
    assert 0.0 <= res.value <= 0.5 * max(rate - i, 0.0) + 1e-9
    assert abs(esc_objective(p, w, res.minimizing_kernel, rate) - res.value) < 1e-9


def test_esc_monotone_in_rate():
    p, w = uniform(2), bsc(0.03)
    i = mutual_information(p, w)
    vals = [soft_covering_exponent(p, w, f * i).value for f in np.linspace(0.0, 3.0, 13)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6))
def test_project_simplex(v):
    v = np.asarray(v)
    x = project_simplex(v)
    assert abs(x.sum() - 1) < 1e-12 and np.all(x >= 0)
    # KKT: x is the closest point, so no simplex vertex is strictly closer along a feasible move
    for j in range(v.size):
        e = np.zeros(v.size)
        e[j] = 1.0
        for t in (1e-3, 1e-1):
            y = (1 - t) * x + t * e
            assert np.sum((y - v) ** 2) >= np.sum((x - v) ** 2) - 1e-12


def test_membership_table1_uniform():
    pol = uniform_policy()
    m = resolvability_membership(FAM, pol, 0, 1)
    assert mixture_chernoff(FAM, pol, 0, 1) <= 1e-12
    r = r1_r2_rkey(FAM, pol, 0)
    assert abs((r.r1 - r.r2 + r.r_key) / LN2 - 0.327445) < 1e-6
    assert m.member and m.mixture_chernoff < min(m.esc_s, m.esc_t)


def leaky_family():
    """Ternary input, binary legitimate output, near-clean ternary Eve output."""
    w1 = [[[0.8, 0.2], [0.5, 0.5], [0.3, 0.7]], [[0.7, 0.3], [0.45, 0.55], [0.2, 0.8]]]
    def eve(e):
        return (1 - 1.5 * e) * np.eye(3) + e / 2 * np.ones((3, 3))
    return build_family(w1, [eve(0.02), eve(0.04)])


def test_membership_fails_with_negative_margin():
    # Eve learns more about X than the legitimate output can carry in total
    fam = leaky_family()
    pol = InputPolicy.common(uniform(3), 2)
    r = r1_r2_rkey(fam, pol, 0)
    assert r.r1 - r.r2 + r.r_key < 0
    assert not resolvability_membership(fam, pol, 0, 1).member


def test_membership_at_eve_information_rate_is_empty():
    # feeding E_SC with R2 = I(P; W2) zeroes the exponent, so no pair can qualify
    pol = uniform_policy()
    for s in range(2):
        r2 = r1_r2_rkey(FAM, pol, s).r2
        assert not resolvability_membership(FAM, pol, s, 1 - s, rate_override=r2).member


def test_remark_mixture_below_esc_near_uniform():
    for a in np.linspace(0.4, 0.6, 5):
        for b in np.linspace(0.4, 0.6, 5):
            pol = InputPolicy(([a, 1 - a], [b, 1 - b]))
            m = resolvability_membership(FAM, pol, 0, 1)
            assert m.mixture_chernoff < min(m.esc_s, m.esc_t)


def test_e2_examples():
    assert e2_bound(FAM, uniform_policy(0.0)).value <= 1e-12
    c = [conditional_chernoff(FAM.w2[s], FAM.w2[1 - s], uniform(2)) for s in range(2)]
    assert abs(e2_bound(FAM, uniform_policy(1.0)).value - min(c)) < 1e-15
    assert abs(c[0] - chernoff([0.94, 0.06], [0.97, 0.03])[0]) < 1e-12


def test_e2_non_resolvable_ignores_rho():
    fam = leaky_family()
    vals = {e2_bound(fam, InputPolicy.common(uniform(3), 2, r)).value for r in (0.0, 0.3, 1.0)}
    assert len(vals) == 1


def test_rate_bound_examples():
    r0 = [closed_form_rates(s) for s in range(2)]
    rb0, per0 = rate_bound(FAM, uniform_policy(0.0))
    for s in range(2):
        assert abs(per0[s] / LN2 - (r0[s][0] - r0[s][1] + r0[s][2])) < 1e-12
    assert abs(rb0 / LN2 - min(r[0] - r[1] + r[2] for r in r0)) < 1e-12
    rb1, per1 = rate_bound(FAM, uniform_policy(1.0))
    assert abs(rb1 / LN2 - min(min(r[0], r[2]) for r in r0)) < 1e-12
    assert abs(per1[0] / LN2 - h2(0.1)) < 1e-12


@given(st.floats(0.0, 1.0))
def test_rate_bound_affine_in_rho(rho):
    pol = uniform_policy()
    for s in range(2):
        r = r1_r2_rkey(FAM, pol, s)
        b0, b1 = state_rate_bound(r, 0.0), state_rate_bound(r, 1.0)
        unc = rho * r.r_key + (1 - rho) * max(r.r1 - r.r2 + r.r_key, 0.0)
        assert state_rate_bound(r, rho) == min(unc, r.r1)
        if max(r.r_key, r.r1 - r.r2 + r.r_key) <= r.r1:
            assert abs(state_rate_bound(r, rho) - (rho * b1 + (1 - rho) * b0)) < 1e-15


_ENDS = {}


@settings(max_examples=20)
@given(st.floats(0.0, 1.0))
def test_e2_affine_in_rho_for_resolvable_pairs(rho):
    if not _ENDS:
        _ENDS.update({r: e2_bound(FAM, uniform_policy(r)).pairs for r in (0.0, 1.0)})
    base, top = _ENDS[0.0], _ENDS[1.0]
    mid = e2_bound(FAM, uniform_policy(rho)).pairs
    for key, (v, m) in mid.items():
        assert m.member
        assert abs(v - (rho * top[key][0] + (1 - rho) * base[key][0])) < 1e-15


def test_region_point_corners():
    p0 = region_point(FAM, uniform_policy(0.0))
    assert abs(p0.R / LN2 - (1 - h2(0.15) - (1 - h2(0.03)) + h2(0.15))) < 1e-12
    assert abs(p0.E1 - bern_kl(0.1, 0.15)) < 1e-14 and p0.E2 <= 1e-12
    p1 = region_point(FAM, uniform_policy(1.0))
    assert abs(p1.R / LN2 - (1 - h2(0.15))) < 1e-12
    assert p1.E2 == min(conditional_chernoff(FAM.w2[s], FAM.w2[1 - s], uniform(2)) for s in range(2))


def test_region_point_point_mass_gives_zero_rate():
    assert region_point(FAM, InputPolicy.common(point_mass(0, 2), 2, 0.5)).R == 0.0


def test_region_point_permutation_covariant():
    fam_b = build_family(FAM.w1[::-1], FAM.w2[::-1])
    pol = InputPolicy(([0.4, 0.6], [0.55, 0.45]), 0.3)
    pol_b = InputPolicy(pol.per_state_inputs[::-1], 0.3)
    a, b = region_point(FAM, pol), region_point(fam_b, pol_b)
    assert (a.R, a.E1, a.E2) == pytest.approx((b.R, b.E1, b.E2), abs=1e-15)
    assert a.per_state_detail[0].r1 == b.per_state_detail[1].r1


def test_sweep_matches_pointwise_evaluation():
    spec = SweepSpec(resolution=6, rho_grid=(0.0, 0.5, 1.0))
    res = sweep_boundary(FAM, spec)
    assert len(res.points) == 7 * 7 * 3
    for pt in res.points[::5]:
        ref = region_point(FAM, pt.policy)
        assert (pt.R, pt.E1, pt.E2) == pytest.approx((ref.R, ref.E1, ref.E2), abs=1e-13)


def test_pareto_dominates_every_point():
    res = sweep_boundary(FAM, SweepSpec(resolution=5, rho_grid=(0.0, 0.25, 0.5, 0.75, 1.0)))
    front = [res.points[i] for i in res.pareto]
    for p in res.points:
        assert any(f.R >= p.R - 1e-12 and f.E2 <= p.E2 + 1e-12 for f in front)
    rs = [f.R for f in front]
    assert rs == sorted(rs)


def test_pareto_indices_small():
    # rate is maximised while Eve's exponent is minimised
    assert pareto_indices([1, 2, 3, 2], [0, 1, 2, 1.5]) == [0, 1, 2]
    assert pareto_indices([1, 2, 3, 2], [3, 2, 1, 1]) == [2]


def test_label_points_single_and_empty():
    res = label_points([region_point(FAM, uniform_policy(0.0))])
    assert res.labels["P_SO"] == res.labels["P_CO"] == 0
    with pytest.raises(InvalidInputError):
        label_points([])


def test_spec_rho_grid_shorthand():
    assert SweepSpec.from_dict({"rho_grid": 3}).rho_grid == (0.0, 0.5, 1.0)
    with pytest.raises(InvalidInputError):
        SweepSpec.from_dict({"rho_grid": []})
