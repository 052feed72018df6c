"""Shaped rewards used as training signals.

``a`` denotes the active joint torque divided by its torque limit.
Angles are wrapped so that the upright pose is the unique maximiser of the
history reward on the torus.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import ModelParams, RobotKind, end_effector_height

# (beta, index of the velocity entering the power term)
HISTORY_SAC_PRESETS = {
    RobotKind.PENDUBOT: (0.1, 0),
    RobotKind.ACROBOT: (0.025, 1),
}


@dataclass(frozen=True)
class RewardConfig:
    """Coefficients of the two-branch surrogate reward.

    ``v_term`` selects the shared offset ``V``: ``"zero"`` or ``"height"``
    (tip height divided by the total arm length). ``T`` is the elapsed
    time in seconds.
    """

    alpha: float = 1.0
    beta: float = 0.01
    rho1: float = 0.1
    rho2: float = 0.1
    phi1: float = 0.1
    phi2: float = 0.1
    eta: float = 0.001
    y_th: float = 0.45
    v_term: str = "zero"

    def __post_init__(self):
        if self.v_term not in ("zero", "height"):
            raise ValueError("v_term must be 'zero' or 'height'")


def _wrap_pi(angle):
    return (angle + np.pi) % (2 * np.pi) - np.pi


def reward_history_sac(s, a, a_prev, dt, preset="pendubot"):
    """Non-positive quadratic reward, 0 only at rest upright with zero action.

    Raises
    ------
    ValueError
        If ``dt`` is not positive.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    beta, joint = HISTORY_SAC_PRESETS[RobotKind(preset)]
    q1, q2, qd1, qd2 = (float(v) for v in s)
    e1 = _wrap_pi(q1 - np.pi)
    e2 = _wrap_pi(q2)
    qd_i = (qd1, qd2)[joint]
    penalty = (
        0.02 * (qd1**2 + qd2**2)
        + 0.25 * (a**2 + 2 * abs(a))
        + 0.02 * abs((a - a_prev) / dt)
        + 0.05 * (qd_i * a) * beta
    )
    return -0.05 * (e1**2 + e2**2) - penalty


def reward_evolsac(s, a, delta_a, config=None, p=None, t=0.0):
    """Two-branch surrogate reward switching on the tip height.

    Above ``y_th``: ``V + alpha (1 + cos q2)^2 - beta T - rho1 a^2 - phi1 |da|``;
    otherwise ``V - rho2 a^2 - phi2 |da| - eta |qd|^2``.
    """
    config = config or RewardConfig()
    p = p or ModelParams()
    y = end_effector_height(p, s)
    v = y / (p.l1 + p.l2) if config.v_term == "height" else 0.0
    if y > config.y_th:
        return (
            v
            + config.alpha * (1 + np.cos(s[1])) ** 2
            - config.beta * t
            - config.rho1 * a**2
            - config.phi1 * abs(delta_a)
        )
    return v - config.rho2 * a**2 - config.phi2 * abs(delta_a) - config.eta * (s[2] ** 2 + s[3] ** 2)


def _normalised_actions(traj, p, kind):
    kind = RobotKind(kind)
    j = kind.active_joint
    limit = p.torque_limits()[j]
    a = traj.tau[:, j] / limit if limit > 0 else np.zeros(len(traj))
    a_prev = np.concatenate([[0.0], a[:-1]])
    return a, a_prev


def history_sac_return(traj, p, kind):
    """Mean per-step history reward over the trajectory's control steps."""
    kind = RobotKind(kind)
    beta, joint = HISTORY_SAC_PRESETS[kind]
    a, a_prev = _normalised_actions(traj, p, kind)
    x = traj.x
    dt = traj.dt
    e1 = _wrap_pi(x[:, 0] - np.pi)
    e2 = _wrap_pi(x[:, 1])
    r = -0.05 * (e1**2 + e2**2) - (
        0.02 * (x[:, 2] ** 2 + x[:, 3] ** 2)
        + 0.25 * (a**2 + 2 * np.abs(a))
        + 0.02 * np.abs((a - a_prev) / dt)
        + 0.05 * (x[:, 2 + joint] * a) * beta
    )
    return float(np.mean(r[:-1]))


def evolsac_return(traj, p, kind, config=None):
    """Mean per-step surrogate reward over the trajectory's control steps."""
    config = config or RewardConfig()
    a, a_prev = _normalised_actions(traj, p, kind)
    x = traj.x
    y = traj.heights(p)
    v = y / (p.l1 + p.l2) if config.v_term == "height" else np.zeros(len(traj))
    da = np.abs(a - a_prev)
    up = v + config.alpha * (1 + np.cos(x[:, 1])) ** 2 - config.beta * traj.t - config.rho1 * a**2 - config.phi1 * da
    down = v - config.rho2 * a**2 - config.phi2 * da - config.eta * (x[:, 2] ** 2 + x[:, 3] ** 2)
    r = np.where(y > config.y_th, up, down)
    return float(np.mean(r[:-1]))
