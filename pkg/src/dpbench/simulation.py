"""Closed-loop simulation with injectable plant imperfections."""

import logging
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive, check_state
from .dynamics import RobotKind, _actuate, _clamp_motor, _rk4, end_effector_height
from .perturbations import PerturbationProfile

logger = logging.getLogger(__name__)

DEFAULT_DT = 0.002
DEFAULT_T_FINAL = 10.0


@dataclass(frozen=True)
class ImperfectionConfig:
    """Imperfections injected between controller and plant.

    Parameters
    ----------
    vel_noise_sigma : float
        Std of Gaussian noise on measured joint velocities (rad/s).
    torque_noise_sigma : float
        Std of Gaussian noise on the active motor torque (N m).
    k_resp : float
        Motor responsiveness in (0, 1]; 1 applies the desired torque directly.
    delay : float
        Measurement delay (s), realised as ``round(delay / dt)`` samples.
    perturbation : PerturbationProfile or None
        External torque added on top of the motor torques.
    rng_seed : int
        Seed for the noise streams.
    """

    vel_noise_sigma: float = 0.0
    torque_noise_sigma: float = 0.0
    k_resp: float = 1.0
    delay: float = 0.0
    perturbation: PerturbationProfile = None
    rng_seed: int = 0

    def __post_init__(self):
        check_positive(self.vel_noise_sigma, "vel_noise_sigma", strict=False)
        check_positive(self.torque_noise_sigma, "torque_noise_sigma", strict=False)
        check_positive(self.delay, "delay", strict=False)
        if not 0.0 < self.k_resp <= 1.0:
            raise ValueError(f"k_resp must lie in (0, 1], got {self.k_resp}")


@dataclass(eq=False)
class Trajectory:
    """Uniformly sampled closed-loop record.

    ``tau`` holds the motor torques actually applied, ``tau_des`` the
    torques requested after actuation selection, and ``tau_pert`` the
    external perturbation. The plant integrates ``tau + tau_pert``.
    """

    t: np.ndarray
    x: np.ndarray
    tau: np.ndarray
    tau_des: np.ndarray = None
    tau_pert: np.ndarray = None
    diverged: bool = False

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float).reshape(-1, 4)
        self.tau = np.asarray(self.tau, dtype=float).reshape(-1, 2)
        n = self.t.size
        if self.tau_des is None:
            self.tau_des = self.tau.copy()
        if self.tau_pert is None:
            self.tau_pert = np.zeros((n, 2))
        self.tau_des = np.asarray(self.tau_des, dtype=float).reshape(-1, 2)
        self.tau_pert = np.asarray(self.tau_pert, dtype=float).reshape(-1, 2)
        for name in ("x", "tau", "tau_des", "tau_pert"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} rows, expected {n}")

    def __len__(self):
        return self.t.size

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.diverged == other.diverged and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("t", "x", "tau", "tau_des", "tau_pert")
        )

    @property
    def dt(self):
        if len(self) < 2:
            raise ValueError("trajectory needs at least two samples to define dt")
        return float(self.t[1] - self.t[0])

    @property
    def t_final(self):
        return float(self.t[-1])

    def heights(self, p):
        q1, q2 = self.x[:, 0], self.x[:, 1]
        return -p.l1 * np.cos(q1) - p.l2 * np.cos(q1 + q2)


def n_steps(t_final, dt):
    return int(round(t_final / dt))


def rollout(
    controller,
    kind,
    p,
    imperfections=None,
    t_final=DEFAULT_T_FINAL,
    dt=DEFAULT_DT,
    x0=None,
):
    """Simulate one closed-loop trial.

    Each sample ``k`` runs: delayed measurement, velocity noise, controller,
    actuation selection, motor response filter, torque noise on the active
    joint, motor clamping, and finally the RK4 step with the perturbation
    torque added. The controller is reset before the first sample.

    Returns
    -------
    Trajectory
        ``round(t_final / dt) + 1`` samples, fewer if the state diverged.
    """
    kind = RobotKind(kind)
    check_positive(dt, "dt")
    check_positive(t_final, "t_final")
    x = check_state(np.zeros(4) if x0 is None else x0).copy()
    imp = imperfections
    pa = p.to_array()
    active = kind.active_joint
    n = n_steps(t_final, dt)
    times = np.arange(n + 1) * dt

    delay_steps = 0
    vel_rng = torque_rng = None
    pert = None
    k_resp = 1.0
    if imp is not None:
        delay_steps = int(round(imp.delay / dt))
        vel_ss, torque_ss = np.random.SeedSequence(imp.rng_seed).spawn(2)
        if imp.vel_noise_sigma > 0:
            vel_rng = np.random.default_rng(vel_ss)
        if imp.torque_noise_sigma > 0:
            torque_rng = np.random.default_rng(torque_ss)
        if imp.perturbation is not None:
            pert = imp.perturbation.sample(times)
        k_resp = imp.k_resp

    xs = np.empty((n + 1, 4))
    taus = np.empty((n + 1, 2))
    des = np.empty((n + 1, 2))
    perts = np.zeros((n + 1, 2))
    tau_prev = np.zeros(2)
    diverged = False
    controller.reset()

    last = n
    for k in range(n + 1):
        xs[k] = x
        meas = xs[max(k - delay_steps, 0)].copy()
        if vel_rng is not None:
            meas[2:] += imp.vel_noise_sigma * vel_rng.standard_normal(2)
        u = controller.get_control(meas, times[k])
        t1, t2 = _actuate(pa, active, float(u[0]), float(u[1]), meas[2], meas[3])
        des[k, 0], des[k, 1] = t1, t2
        if k_resp != 1.0:
            t1 = tau_prev[0] + k_resp * (t1 - tau_prev[0])
            t2 = tau_prev[1] + k_resp * (t2 - tau_prev[1])
        if torque_rng is not None:
            noise = imp.torque_noise_sigma * torque_rng.standard_normal()
            if active == 0:
                t1 += noise
            else:
                t2 += noise
        t1, t2 = _clamp_motor(pa, active, t1, t2)
        taus[k, 0], taus[k, 1] = t1, t2
        tau_prev[0], tau_prev[1] = t1, t2
        if k == n:
            break
        if pert is not None:
            perts[k] = pert[k]
            t1 = t1 + pert[k, 0]
            t2 = t2 + pert[k, 1]
        x = _rk4(pa, x, t1, t2, dt)
        if not (np.isfinite(x[0]) and np.isfinite(x[1]) and np.isfinite(x[2]) and np.isfinite(x[3])):
            logger.warning("simulation diverged at t=%.4f", times[k + 1])
            diverged = True
            last = k
            break

    if pert is not None and not diverged:
        perts[n] = pert[n]
    m = last + 1
    return Trajectory(
        t=times[:m].copy(),
        x=xs[:m].copy(),
        tau=taus[:m].copy(),
        tau_des=des[:m].copy(),
        tau_pert=perts[:m].copy(),
        diverged=diverged,
    )


def final_height(traj, p):
    return end_effector_height(p, traj.x[-1])
