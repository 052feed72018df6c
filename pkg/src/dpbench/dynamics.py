"""Double pendulum plant: parameters, equations of motion and RK4 integration.

Conventions
-----------
A state is a float array ``[q1, q2, qd1, qd2]``. ``q1`` is measured from the
downward hanging vertical, ``q2`` relative to link 1, so ``(0, 0)`` hangs and
``(pi, 0)`` is upright. Torques are pairs ``[tau1, tau2]``.

The equations of motion are the standard two-link manipulator form

    M(q) qdd + C(q, qd) qd + G(q) + F(qd) = tau

with viscous plus smoothed Coulomb friction ``F_i = b_i qd_i + cf_i tanh(k qd_i)``.
``I1`` and ``I2`` are link inertias about their joints (they include
``m_i r_i**2``).

The scalar kernels are numba-compiled so that the generic rollout and the fast
policy-search rollout share bit-identical arithmetic.
"""

import math
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum

import numba
import numpy as np

from ._validation import DivergedSimulationError, check_positive, check_state

FRICTION_SMOOTHING = 100.0
PASSIVE_TORQUE_LIMIT = 0.5

# index layout of ModelParams.to_array()
_M1, _M2, _L1, _L2, _R1, _R2, _I1, _I2, _B1, _B2, _CF1, _CF2, _G, _TL1, _TL2 = range(15)


class RobotKind(str, Enum):
    """Which joint carries the motor."""

    ACROBOT = "acrobot"
    PENDUBOT = "pendubot"

    @property
    def active_joint(self):
        return 1 if self is RobotKind.ACROBOT else 0

    @property
    def passive_joint(self):
        return 1 - self.active_joint


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the double pendulum.

    The defaults describe a 0.2 m / 0.3 m double pendulum whose second link
    carries a 0.5 kg attached mass (included in ``m2``), with a 6 N m actuator
    on each joint. The centres of mass leave room for +-25 % scaling of any
    single parameter without violating ``r_i <= l_i``.
    """

    m1: float = 0.6
    m2: float = 0.6
    l1: float = 0.2
    l2: float = 0.3
    r1: float = 0.15
    r2: float = 0.22
    I1: float = 0.0155
    I2: float = 0.032
    b1: float = 0.005
    b2: float = 0.005
    cf1: float = 0.02
    cf2: float = 0.02
    g: float = 9.81
    tau_limit1: float = 6.0
    tau_limit2: float = 6.0

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "I1", "I2", "g"):
            check_positive(getattr(self, name), name)
        for name in ("b1", "b2", "cf1", "cf2", "tau_limit1", "tau_limit2"):
            check_positive(getattr(self, name), name, strict=False)
        for i in (1, 2):
            r, l = getattr(self, f"r{i}"), getattr(self, f"l{i}")
            if not 0 < r <= l:
                raise ValueError(f"r{i} must satisfy 0 < r{i} <= l{i}, got r{i}={r}, l{i}={l}")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def to_array(self):
        return np.array([getattr(self, n) for n in self.field_names()], dtype=float)

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(**dict(zip(cls.field_names(), map(float, values))))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.field_names())
        if unknown:
            raise ValueError(f"unknown model parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def replace(self, **changes):
        return replace(self, **changes)

    def frictionless(self):
        return replace(self, b1=0.0, b2=0.0, cf1=0.0, cf2=0.0)

    def torque_limits(self):
        return np.array([self.tau_limit1, self.tau_limit2])


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _accel(p, q1, q2, qd1, qd2, tau1, tau2):
    m2, l1, r2 = p[_M2], p[_L1], p[_R2]
    I1, I2, g = p[_I1], p[_I2], p[_G]
    c2 = math.cos(q2)
    s2 = math.sin(q2)
    m11 = I1 + I2 + m2 * l1 * l1 + 2.0 * m2 * l1 * r2 * c2
    m12 = I2 + m2 * l1 * r2 * c2
    m22 = I2
    h = m2 * l1 * r2 * s2
    cor1 = -2.0 * h * qd1 * qd2 - h * qd2 * qd2
    cor2 = h * qd1 * qd1
    s12 = math.sin(q1 + q2)
    grav1 = g * (p[_M1] * p[_R1] + m2 * l1) * math.sin(q1) + m2 * g * r2 * s12
    grav2 = m2 * g * r2 * s12
    fr1 = p[_B1] * qd1 + p[_CF1] * math.tanh(FRICTION_SMOOTHING * qd1)
    fr2 = p[_B2] * qd2 + p[_CF2] * math.tanh(FRICTION_SMOOTHING * qd2)
    rhs1 = tau1 - cor1 - grav1 - fr1
    rhs2 = tau2 - cor2 - grav2 - fr2
    det = m11 * m22 - m12 * m12
    a1 = (m22 * rhs1 - m12 * rhs2) / det
    a2 = (m11 * rhs2 - m12 * rhs1) / det
    return a1, a2


@numba.njit(cache=True)
def _rk4(p, x, tau1, tau2, dt):
    q1, q2, v1, v2 = x[0], x[1], x[2], x[3]
    a1, a2 = _accel(p, q1, q2, v1, v2, tau1, tau2)
    k1 = (v1, v2, a1, a2)
    h = 0.5 * dt
    b1, b2 = _accel(p, q1 + h * k1[0], q2 + h * k1[1], v1 + h * k1[2], v2 + h * k1[3], tau1, tau2)
    k2 = (v1 + h * k1[2], v2 + h * k1[3], b1, b2)
    c1, c2 = _accel(p, q1 + h * k2[0], q2 + h * k2[1], v1 + h * k2[2], v2 + h * k2[3], tau1, tau2)
    k3 = (v1 + h * k2[2], v2 + h * k2[3], c1, c2)
    d1, d2 = _accel(
        p, q1 + dt * k3[0], q2 + dt * k3[1], v1 + dt * k3[2], v2 + dt * k3[3], tau1, tau2
    )
    k4 = (v1 + dt * k3[2], v2 + dt * k3[3], d1, d2)
    out = np.empty(4)
    s = dt / 6.0
    out[0] = q1 + s * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    out[1] = q2 + s * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    out[2] = v1 + s * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    out[3] = v2 + s * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    return out


@numba.njit(cache=True)
def _height(p, q1, q2):
    return -p[_L1] * math.cos(q1) - p[_L2] * math.cos(q1 + q2)


@numba.njit(cache=True)
def _clip(value, limit):
    if value > limit:
        return limit
    if value < -limit:
        return -limit
    return value


@numba.njit(cache=True)
def _actuate(p, active, u1, u2, qd1, qd2):
    # active joint: clamp the command; passive joint: friction compensation only
    if active == 0:
        t1 = _clip(u1, p[_TL1])
        comp = p[_B2] * qd2 + p[_CF2] * math.tanh(FRICTION_SMOOTHING * qd2)
        t2 = _clip(comp, PASSIVE_TORQUE_LIMIT)
    else:
        t2 = _clip(u2, p[_TL2])
        comp = p[_B1] * qd1 + p[_CF1] * math.tanh(FRICTION_SMOOTHING * qd1)
        t1 = _clip(comp, PASSIVE_TORQUE_LIMIT)
    return t1, t2


@numba.njit(cache=True)
def _clamp_motor(p, active, t1, t2):
    if active == 0:
        return _clip(t1, p[_TL1]), _clip(t2, PASSIVE_TORQUE_LIMIT)
    return _clip(t1, PASSIVE_TORQUE_LIMIT), _clip(t2, p[_TL2])


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def mass_matrix(p, q):
    """Inertia matrix ``M(q)`` for joint angles ``q = (q1, q2)``."""
    c2 = np.cos(q[1])
    m11 = p.I1 + p.I2 + p.m2 * p.l1**2 + 2 * p.m2 * p.l1 * p.r2 * c2
    m12 = p.I2 + p.m2 * p.l1 * p.r2 * c2
    return np.array([[m11, m12], [m12, p.I2]])


def forward_dynamics(p, s, tau):
    """Joint accelerations ``qdd`` for state ``s`` under torques ``tau``.

    Raises
    ------
    DivergedSimulationError
        If the state is not finite.
    """
    x = check_state(s)
    a1, a2 = _accel(p.to_array(), x[0], x[1], x[2], x[3], float(tau[0]), float(tau[1]))
    return np.array([a1, a2])


def step(p, s, tau, dt):
    """Advance ``s`` by one RK4 step of length ``dt`` with ``tau`` held constant."""
    check_positive(dt, "dt")
    x = check_state(s)
    out = _rk4(p.to_array(), x, float(tau[0]), float(tau[1]), float(dt))
    if not np.all(np.isfinite(out)):
        raise DivergedSimulationError(f"state diverged after step: {out}")
    return out


def end_effector_height(p, s):
    """Height of the tip above the base (m); -(l1+l2) hanging, +(l1+l2) upright."""
    return float(_height(p.to_array(), float(s[0]), float(s[1])))


def forward_kinematics(p, s):
    """Cartesian positions of the elbow and the tip, ``y`` pointing up."""
    q1, q2 = s[0], s[1]
    elbow = np.array([p.l1 * np.sin(q1), -p.l1 * np.cos(q1)])
    tip = elbow + np.array([p.l2 * np.sin(q1 + q2), -p.l2 * np.cos(q1 + q2)])
    return elbow, tip


def total_energy(p, s):
    """Kinetic plus potential energy, zero potential at the base height."""
    x = np.asarray(s, dtype=float)
    qd = x[2:]
    kinetic = 0.5 * qd @ mass_matrix(p, x[:2]) @ qd
    potential = -p.m1 * p.g * p.r1 * np.cos(x[0]) - p.m2 * p.g * (
        p.l1 * np.cos(x[0]) + p.r2 * np.cos(x[0] + x[1])
    )
    return float(kinetic + potential)


def upright_energy(p):
    return float(p.m1 * p.g * p.r1 + p.m2 * p.g * (p.l1 + p.r2))


def apply_actuation(kind, u, p, s):
    """Map a commanded torque pair to what the motors may apply.

    The active joint is clamped to its torque limit. The passive joint
    ignores the command and receives friction compensation
    ``b qd + cf tanh(k qd)`` clamped to 0.5 N m.
    """
    kind = RobotKind(kind)
    t1, t2 = _actuate(
        p.to_array(), kind.active_joint, float(u[0]), float(u[1]), float(s[2]), float(s[3])
    )
    return np.array([t1, t2])


def responsive_torque(tau_prev, tau_des, k_resp):
    """First-order motor response ``tau_prev + k_resp (tau_des - tau_prev)``."""
    if not 0.0 < k_resp <= 1.0:
        raise ValueError(f"k_resp must lie in (0, 1], got {k_resp}")
    tau_des = np.asarray(tau_des, dtype=float)
    if k_resp == 1.0:
        # exact passthrough; the formula can be off by one ulp
        return tau_des.copy()
    tau_prev = np.asarray(tau_prev, dtype=float)
    return tau_prev + k_resp * (tau_des - tau_prev)
