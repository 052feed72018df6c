import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpbench.scoring import (
    HARDWARE_WEIGHTS,
    SIMULATION_WEIGHTS,
    Criteria,
    ScoreReport,
    WeightSet,
    average_score,
    check_success,
    compute_criteria,
    get_weights,
    performance_score,
    score_trajectory,
    swingup_time,
)
from dpbench.simulation import Trajectory

UP = [math.pi, 0.0, 0.0, 0.0]
DOWN = [0.0, 0.0, 0.0, 0.0]


def traj_from(states, tau=None, dt=0.5):
    x = np.array(states, dtype=float)
    tau = np.zeros((len(x), 2)) if tau is None else np.array(tau, dtype=float)
    return Trajectory(np.arange(len(x)) * dt, x, tau)


def crit(success=True, t=0.0, e=0.0, tc=0.0, ts=0.0, v=0.0):
    return Criteria(success, t, e, tc, ts, v)


def test_success_with_zero_costs_scores_one():
    assert performance_score(crit()) == 1.0


def test_failure_scores_zero():
    assert performance_score(crit(success=False, t=1.0)) == 0.0


def test_ten_second_swingup_reference_value():
    expected = 1 - math.tanh(math.pi / 2) / 5
    assert performance_score(crit(t=10.0), SIMULATION_WEIGHTS) == pytest.approx(expected, abs=1e-12)
    # the commonly quoted 0.816571 is this value rounded up in the last digit
    assert abs(expected - 0.816571) < 2e-6


def test_weight_presets_exact():
    assert tuple(SIMULATION_WEIGHTS.as_array()) == (
        math.pi / 20,
        math.pi / 60,
        math.pi / 20,
        10 * math.pi,
        math.pi / 400,
    )
    assert tuple(HARDWARE_WEIGHTS.as_array()) == (
        math.pi / 20,
        math.pi / 60,
        math.pi / 100,
        math.pi / 4,
        math.pi / 400,
    )
    assert get_weights("hardware") is HARDWARE_WEIGHTS
    with pytest.raises(ValueError):
        get_weights("lab")
    with pytest.raises(ValueError):
        WeightSet(1, 1, 1, 0, 1)


@given(
    st.booleans(),
    *[st.floats(0, 1e6, allow_nan=False) for _ in range(5)],
    st.sampled_from([SIMULATION_WEIGHTS, HARDWARE_WEIGHTS]),
)
def test_score_bounded(success, t, e, tc, ts, v, w):
    s = performance_score(Criteria(success, t, e, tc, ts, v), w)
    assert 0.0 <= s <= 1.0
    if not success:
        assert s == 0.0


@given(st.floats(0, 100), st.floats(0, 100))
def test_score_monotone_in_time(a, b):
    lo, hi = sorted((a, b))
    assert performance_score(crit(t=lo)) >= performance_score(crit(t=hi))


def test_success_is_strict_threshold(params):
    # tip exactly at 0.45 fails, just above passes
    q = math.acos(-0.45 / 0.5)
    at = traj_from([DOWN, [q, 0, 0, 0]])
    assert not check_success(at, params, threshold=0.45 + 1e-12)
    assert check_success(traj_from([DOWN, UP]), params)
    assert not check_success(traj_from([UP, DOWN]), params)


def test_diverged_trajectory_fails(params):
    traj = traj_from([DOWN, UP])
    traj.diverged = True
    assert not check_success(traj, params)


def test_swingup_time_is_last_entry_into_region(params):
    traj = traj_from([DOWN, UP, DOWN, UP, UP])
    assert swingup_time(traj, params) == pytest.approx(1.5)
    assert swingup_time(traj_from([DOWN, UP, DOWN]), params) == pytest.approx(1.0)
    assert swingup_time(traj_from([UP, UP]), params) == 0.0


def test_criteria_hand_values(params):
    x = [[0, 0, 1.0, 2.0], [0, 0, -1.0, 0.0], [0, 0, 0.0, 0.0]]
    tau = [[2.0, 0.0], [1.0, 1.0], [0.0, 0.0]]
    c = compute_criteria(traj_from(x, tau, dt=0.1), params)
    assert c.energy == pytest.approx((2 * 1 + 1 * 1) * 0.1)
    assert c.torque_cost == pytest.approx((4 + 1 + 1) * 0.1)
    assert c.velocity_cost == pytest.approx((1 + 4 + 1) * 0.1)
    assert c.torque_smoothness == pytest.approx((math.sqrt(2) + math.sqrt(2)) / 2)


def test_criteria_need_two_samples(params):
    with pytest.raises(ValueError):
        compute_criteria(traj_from([DOWN]), params)


def test_report_roundtrip(baseline_traj, params):
    report = score_trajectory(baseline_traj, params)
    again = ScoreReport.from_dict(report.to_dict())
    assert again == report
    assert average_score([report, again]) == report.score
    with pytest.raises(ValueError):
        average_score([])


def test_baseline_scores_positive(baseline_traj, params):
    report = score_trajectory(baseline_traj, params)
    assert report.criteria.success
    assert 0 < report.score < 1
