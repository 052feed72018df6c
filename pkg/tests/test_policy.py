import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpbench.dynamics import ModelParams
from dpbench.optimize.policy_search import fast_policy_rollout
from dpbench.perturbations import generate_perturbation_profile
from dpbench.policy import (
    HISTORY_FRAMES,
    PolicyParams,
    history_features,
    mlp_policy_forward,
    n_params,
    policy_controller,
    policy_from_bytes,
    policy_to_bytes,
    state_features,
)
from dpbench.simulation import ImperfectionConfig, rollout


def reference_forward(policy, features, limit):
    """Plain numpy evaluation of the documented parameter layout."""
    act = np.asarray(features, dtype=float)
    theta = policy.params
    offset = 0
    sizes = policy.layer_sizes
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        W = theta[offset : offset + n_in * n_out].reshape(n_out, n_in)
        offset += n_in * n_out
        b = theta[offset : offset + n_out]
        offset += n_out
        act = np.tanh(W @ act + b)
    return limit * act


def test_parameter_count():
    assert n_params((6, 16, 2)) == 6 * 16 + 16 + 16 * 2 + 2
    assert PolicyParams.zeros((8, 8), 12).n_params == n_params((30, 8, 8, 2))


@given(st.integers(0, 10_000), st.sampled_from([0, HISTORY_FRAMES]))
def test_forward_matches_reference(seed, window):
    policy = PolicyParams.random((5, 3), window, scale=1.0, seed=seed)
    feats = np.random.default_rng(seed).normal(size=policy.layer_sizes[0])
    out = mlp_policy_forward(policy, feats, 6.0)
    assert np.allclose(out, reference_forward(policy, feats, 6.0), atol=1e-12)
    assert np.all(np.abs(out) <= 6.0)


def test_feature_layout():
    x = np.array([0.3, -0.4, 2.0, -4.0])
    f = state_features(x)
    assert np.allclose(f, [np.cos(0.3), np.sin(0.3), np.cos(-0.4), np.sin(-0.4), 0.1, -0.2])
    hist = np.arange(24, dtype=float).reshape(12, 2)
    g = history_features(x, hist)
    assert g.shape == (30,)
    assert np.allclose(g[6:8], hist[0] / 20)


def test_wrong_feature_length_raises():
    with pytest.raises(ValueError):
        mlp_policy_forward(PolicyParams.zeros(), np.zeros(5))


def test_invalid_architectures():
    with pytest.raises(ValueError):
        PolicyParams((7, 4, 2), 0)
    with pytest.raises(ValueError):
        PolicyParams((6, 4, 3), 0)
    with pytest.raises(ValueError):
        PolicyParams((6, 4, 2), 0, np.zeros(3))
    with pytest.raises(ValueError):
        PolicyParams.zeros((4,), history_window=5)


@given(st.integers(0, 1000), st.sampled_from([0, HISTORY_FRAMES]))
def test_binary_roundtrip(seed, window):
    policy = PolicyParams.random((7, 3), window, seed=seed)
    data = policy_to_bytes(policy)
    assert data[:4] == b"PBNC"
    assert policy_from_bytes(data) == policy


def test_bad_policy_file():
    with pytest.raises(ValueError):
        policy_from_bytes(b"XXXX" + bytes(20))


def test_history_controller_orders_frames():
    policy = PolicyParams.zeros((4,), HISTORY_FRAMES)
    ctrl = policy_controller(policy, "pendubot", ModelParams()).reset()
    for k in range(14):
        ctrl.get_control(np.array([0, 0, float(k), -float(k)]), 0.002 * k)
    frames = ctrl._features[6:].reshape(12, 2) * 20
    assert np.allclose(frames[:, 0], np.arange(2, 14))


def test_controller_faults_on_nan():
    ctrl = policy_controller(PolicyParams.random(seed=1), "pendubot", ModelParams()).reset()
    assert np.all(ctrl.get_control(np.array([np.nan, 0, 0, 0]), 0.0) == 0)
    assert ctrl.fault_


@pytest.mark.parametrize("window", [0, HISTORY_FRAMES])
@pytest.mark.parametrize("kind", ["pendubot", "acrobot"])
def test_fast_rollout_equals_generic(kind, window, params):
    policy = PolicyParams.random((8,), window, scale=0.8, seed=3)
    prof = generate_perturbation_profile(11, 2.0)
    fast = fast_policy_rollout(policy, kind, params, prof, t_final=2.0)
    slow = rollout(policy_controller(policy, kind, params), kind, params, ImperfectionConfig(perturbation=prof), 2.0)
    assert fast == slow


def test_predict_batch_matches_forward(params):
    policy = PolicyParams.random((6,), 0, seed=2)
    ctrl = policy_controller(policy, "pendubot", params)
    X = np.random.default_rng(0).normal(size=(5, 4))
    expected = np.array([mlp_policy_forward(policy, state_features(x), 6.0) for x in X])
    assert np.array_equal(ctrl.predict(X), expected)
