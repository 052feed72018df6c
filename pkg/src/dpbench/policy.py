"""Multilayer perceptron policies with optional velocity-history input.

Parameters are stored as one flat vector, layer by layer, each layer's
weight matrix (row-major, ``out x in``) followed by its bias. Hidden layers
use ``tanh``; the output is ``torque_limit * tanh(.)``.
"""

import math
import struct
from dataclasses import dataclass, field

import numba
import numpy as np
from sklearn.base import BaseEstimator

from .dynamics import RobotKind

V_MAX = 20.0
HISTORY_FRAMES = 12
N_STATE_FEATURES = 6
POLICY_MAGIC = b"PBNC"
POLICY_VERSION = 1


def n_features(history_window):
    return N_STATE_FEATURES + 2 * history_window


def n_params(layer_sizes):
    """Exact parameter count of a dense network with the given layer sizes."""
    sizes = list(layer_sizes)
    return int(sum(sizes[i + 1] * (sizes[i] + 1) for i in range(len(sizes) - 1)))


@dataclass(eq=False)
class PolicyParams:
    """Architecture plus flat parameter vector of an MLP policy."""

    layer_sizes: tuple
    history_window: int = 0
    params: np.ndarray = field(default=None)

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ValueError(f"invalid layer sizes {self.layer_sizes}")
        if self.history_window not in (0, HISTORY_FRAMES):
            raise ValueError(f"history_window must be 0 or {HISTORY_FRAMES}")
        if self.layer_sizes[0] != n_features(self.history_window):
            raise ValueError(
                f"input size {self.layer_sizes[0]} does not match "
                f"history_window={self.history_window} ({n_features(self.history_window)} features)"
            )
        if self.layer_sizes[-1] != 2:
            raise ValueError("output layer must have size 2")
        if self.params is None:
            self.params = np.zeros(n_params(self.layer_sizes))
        self.params = np.ascontiguousarray(self.params, dtype=float).ravel()
        if self.params.size != n_params(self.layer_sizes):
            raise ValueError(
                f"parameter vector has {self.params.size} entries, "
                f"architecture needs {n_params(self.layer_sizes)}"
            )

    @classmethod
    def zeros(cls, hidden=(16,), history_window=0):
        sizes = (n_features(history_window), *hidden, 2)
        return cls(sizes, history_window)

    @classmethod
    def random(cls, hidden=(16,), history_window=0, scale=0.1, seed=None):
        sizes = (n_features(history_window), *hidden, 2)
        rng = np.random.default_rng(seed)
        return cls(sizes, history_window, scale * rng.standard_normal(n_params(sizes)))

    @property
    def n_params(self):
        return self.params.size

    def with_params(self, params):
        return PolicyParams(self.layer_sizes, self.history_window, np.array(params, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, PolicyParams):
            return NotImplemented
        return (
            self.layer_sizes == other.layer_sizes
            and self.history_window == other.history_window
            and np.array_equal(self.params, other.params)
        )


@numba.njit(cache=True)
def _mlp(params, sizes, features, torque_limit1, torque_limit2):
    act = features.copy()
    offset = 0
    n_layers = sizes.size - 1
    for layer in range(n_layers):
        n_in = sizes[layer]
        n_out = sizes[layer + 1]
        bias_start = offset + n_in * n_out
        nxt = np.empty(n_out)
        for j in range(n_out):
            z = params[bias_start + j]
            row = offset + j * n_in
            for i in range(n_in):
                z += params[row + i] * act[i]
            nxt[j] = math.tanh(z)
        act = nxt
        offset = bias_start + n_out
    return torque_limit1 * act[0], torque_limit2 * act[1]


@numba.njit(cache=True)
def _state_features(x, out):
    out[0] = np.cos(x[0])
    out[1] = np.sin(x[0])
    out[2] = np.cos(x[1])
    out[3] = np.sin(x[1])
    out[4] = x[2] / V_MAX
    out[5] = x[3] / V_MAX


@numba.njit(cache=True)
def _fill_features(x, history, count, window, out):
    # history is a (window, 2) ring of raw velocities, newest at (count - 1) % window
    _state_features(x, out)
    if window == 0:
        return
    for f in range(window):
        # frame f = 0 is the oldest of the window
        back = window - 1 - f
        idx = count - 1 - back
        if idx < 0:
            idx = 0
        slot = idx % window
        out[N_STATE_FEATURES + 2 * f] = history[slot, 0] / V_MAX
        out[N_STATE_FEATURES + 2 * f + 1] = history[slot, 1] / V_MAX


def state_features(x):
    """``[cos q1, sin q1, cos q2, sin q2, qd1 / v_max, qd2 / v_max]``."""
    out = np.empty(N_STATE_FEATURES)
    _state_features(np.asarray(x, dtype=float), out)
    return out


def history_features(x, velocity_history):
    """State features followed by the stacked normalised velocity frames.

    ``velocity_history`` is ordered oldest first and must already contain
    the current frame.
    """
    vel = np.asarray(velocity_history, dtype=float).reshape(-1, 2)
    return np.concatenate([state_features(x), (vel / V_MAX).ravel()])


def mlp_policy_forward(params, features, torque_limit=6.0):
    """Evaluate the policy network on one feature vector.

    Raises
    ------
    ValueError
        If the feature length does not match the network input.
    """
    features = np.ascontiguousarray(features, dtype=float)
    if features.shape != (params.layer_sizes[0],):
        raise ValueError(
            f"expected {params.layer_sizes[0]} features, got shape {features.shape}"
        )
    limits = np.broadcast_to(np.asarray(torque_limit, dtype=float), (2,))
    t1, t2 = _mlp(
        params.params,
        np.asarray(params.layer_sizes, dtype=np.int64),
        features,
        float(limits[0]),
        float(limits[1]),
    )
    return np.array([t1, t2])


class PolicyController(BaseEstimator):
    """Closed-loop controller around an MLP policy.

    Parameters
    ----------
    policy : PolicyParams
    kind : str
        ``"pendubot"`` or ``"acrobot"``; decides the torque scaling.
    torque_limit : float
        Output scale of the network.
    """

    def __init__(self, policy=None, kind="pendubot", torque_limit=6.0):
        self.policy = policy
        self.kind = kind
        self.torque_limit = torque_limit

    def reset(self):
        policy = self.policy if self.policy is not None else PolicyParams.zeros()
        self._policy = policy
        self._sizes = np.asarray(policy.layer_sizes, dtype=np.int64)
        window = policy.history_window
        self._history = np.zeros((max(window, 1), 2))
        self._count = 0
        self._features = np.empty(policy.layer_sizes[0])
        self.fault_ = False
        self.a_prev_ = np.zeros(2)
        self.t_ = 0.0
        return self

    def get_control(self, x, t):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            self.fault_ = True
            return np.zeros(2)
        window = self._policy.history_window
        if window:
            if self._count == 0:
                self._history[:] = x[2:]
            self._history[self._count % window] = x[2:]
            self._count += 1
        _fill_features(x, self._history, self._count, window, self._features)
        t1, t2 = _mlp(
            self._policy.params, self._sizes, self._features, self.torque_limit, self.torque_limit
        )
        self.a_prev_ = np.array([t1, t2])
        self.t_ = t
        return self.a_prev_

    def predict(self, X):
        """Stateless torques for a batch of states (history padded per row)."""
        policy = self.policy if self.policy is not None else PolicyParams.zeros()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], 2))
        for i, x in enumerate(X):
            vel = np.tile(x[2:], (policy.history_window, 1))
            out[i] = mlp_policy_forward(policy, history_features(x, vel), self.torque_limit)
        return out


def policy_controller(policy, kind, p):
    kind = RobotKind(kind)
    limit = p.tau_limit1 if kind is RobotKind.PENDUBOT else p.tau_limit2
    return PolicyController(policy=policy, kind=kind.value, torque_limit=limit)


# ---------------------------------------------------------------------------
# binary policy files
# ---------------------------------------------------------------------------


def policy_to_bytes(policy):
    sizes = policy.layer_sizes
    head = struct.pack(
        f"<4sIII{len(sizes)}I",
        POLICY_MAGIC,
        POLICY_VERSION,
        policy.history_window,
        len(sizes),
        *sizes,
    )
    return head + policy.params.astype("<f8").tobytes()


def policy_from_bytes(data):
    if data[:4] != POLICY_MAGIC:
        raise ValueError("not a policy file (bad magic)")
    version, window, n_layers = struct.unpack_from("<III", data, 4)
    if version != POLICY_VERSION:
        raise ValueError(f"unsupported policy file version {version}")
    sizes = struct.unpack_from(f"<{n_layers}I", data, 16)
    start = 16 + 4 * n_layers
    params = np.frombuffer(data[start:], dtype="<f8").astype(float)
    return PolicyParams(sizes, window, params)


def save_policy(policy, path):
    with open(path, "wb") as fh:
        fh.write(policy_to_bytes(policy))


def load_policy(path):
    with open(path, "rb") as fh:
        return policy_from_bytes(fh.read())
