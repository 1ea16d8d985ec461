import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import h2, kernels
from secisac.chanfam import (
    build_family,
    family_from_dict,
    family_from_json,
    sensing_objective,
    simplex_grid,
    table1_preset,
    universal_input,
    universal_input_grid,
)
from secisac.metrics import _h, key_rate
from secisac.probcore import DegenerateModelError, InvalidInputError, bsc, uniform


def test_table1_preset_rows():
    fam = table1_preset()
    assert fam.num_states == 2
    assert fam.w1[0, 0].tolist() == [0.9, 0.1]
    assert fam.w2[1, 0].tolist() == [0.97, 0.03]
    assert fam.joint_mode == "independent"


def test_identical_states_are_degenerate():
    with pytest.raises(DegenerateModelError):
        build_family([bsc(0.1), bsc(0.1)], [bsc(0.06), bsc(0.03)])


def test_zero_entry_is_degenerate():
    with pytest.raises(DegenerateModelError):
        build_family([np.eye(2), bsc(0.1)], [bsc(0.06), bsc(0.03)])


def test_joint_marginal_mismatch_rejected():
    wj = (bsc(0.2)[:, :, None] * bsc(0.06)[:, None, :]).reshape(2, 4)
    good = (bsc(0.1)[:, :, None] * bsc(0.06)[:, None, :]).reshape(2, 4)
    with pytest.raises(InvalidInputError):
        build_family([bsc(0.1), bsc(0.15)], [bsc(0.06), bsc(0.03)], joint=[wj, good])


def test_table1_json_round_trip_is_exact():
    fam = table1_preset()
    back = family_from_json(fam.to_json())
    for a in ("w1", "w2", "w_joint"):
        assert np.array_equal(getattr(fam, a), getattr(back, a))
    assert family_from_dict({"preset": "table1"}).to_json() == fam.to_json()


def test_family_missing_field_named():
    with pytest.raises(InvalidInputError, match="w2"):
        family_from_dict({"w1": [bsc(0.1).tolist(), bsc(0.2).tolist()]})


def test_universal_input_table1_is_uniform_and_objective_constant():
    fam = table1_preset()
    u = universal_input(fam)
    assert u.p_tilde.tolist() == [0.5, 0.5]
    vals = [sensing_objective(fam, p) for p in simplex_grid(2, 999)]
    assert max(vals) - min(vals) <= 1e-12


def test_universal_input_dominant_symbol():
    w1 = [[[0.9, 0.1], [0.5, 0.5]], [[0.2, 0.8], [0.45, 0.55]]]
    fam = build_family(w1, [bsc(0.06), bsc(0.03)])
    u = universal_input(fam)
    g = universal_input_grid(fam, 1000)
    assert u.p_tilde.tolist() == [1.0, 0.0]
    assert np.allclose(g.p_tilde, u.p_tilde)
    assert abs(u.achieved_value - g.achieved_value) < 1e-12


def test_universal_input_single_symbol():
    fam = build_family([[[0.3, 0.7]], [[0.6, 0.4]]], [[[0.5, 0.5]], [[0.2, 0.8]]])
    assert universal_input(fam).p_tilde.tolist() == [1.0]


def test_universal_input_interior_optimum_matches_grid():
    # each state pair is best separated by a different symbol, so the max-min mixes
    w1 = [
        [[0.9, 0.1], [0.5, 0.5]],
        [[0.3, 0.7], [0.48, 0.52]],
        [[0.88, 0.12], [0.1, 0.9]],
    ]
    w2 = [bsc(0.1), bsc(0.2), bsc(0.3)]
    fam = build_family(w1, w2)
    u = universal_input(fam)
    g = universal_input_grid(fam, 2000)
    assert 0.0 < u.p_tilde[0] < 1.0
    assert u.achieved_value >= g.achieved_value - 1e-9


@given(st.data())
def test_universal_never_loses_to_uniform(data):
    theta = data.draw(st.integers(2, 3))
    nx = data.draw(st.integers(2, 3))
    w1 = [data.draw(kernels(nx, 2)) for _ in range(theta)]
    w2 = [data.draw(kernels(nx, 2)) for _ in range(theta)]
    try:
        fam = build_family(w1, w2)
    except DegenerateModelError:
        return
    assert universal_input(fam).achieved_value >= sensing_objective(fam, uniform(nx)) - 1e-9


@given(st.floats(0.01, 0.44), st.floats(0.01, 0.49), st.floats(0.05, 0.95))
def test_independent_joint_key_rate_collapses(a, b, p0):
    fam = build_family([bsc(a), bsc(a + 0.05)], [bsc(b), bsc(0.5 * b)])
    p = np.array([p0, 1 - p0])
    h_y1_x = _h((p[:, None] * fam.w1[0]).ravel()) - _h(p)
    assert abs(key_rate(p, fam.w_joint[0], 2, 2) - h_y1_x) <= 1e-10
    assert abs(h_y1_x - h2(a) * np.log(2)) <= 1e-10
