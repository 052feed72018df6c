"""Controller interface and the energy-shaping + LQR reference controller."""

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dynamics import ModelParams, RobotKind, _accel, total_energy, upright_energy
from .policy import PolicyController, PolicyParams, policy_controller

UPRIGHT = np.array([np.pi, 0.0, 0.0, 0.0])

__all__ = [
    "Controller",
    "ZeroController",
    "EnergyLQRController",
    "PolicyController",
    "energy_lqr_baseline",
    "linearize",
    "lqr",
    "policy_controller",
    "wrap_to_upright",
]


class Controller(BaseEstimator):
    """Base class for closed-loop controllers.

    Subclasses implement ``get_control(x, t)`` returning a commanded torque
    pair. ``reset()`` is called before every trial.
    """

    def reset(self):
        self.fault_ = False
        return self

    def get_control(self, x, t):
        raise NotImplementedError


class ZeroController(Controller):
    """Always commands zero torque."""

    def get_control(self, x, t):
        return np.zeros(2)


def wrap_to_upright(x):
    """State error to the upright equilibrium with angles wrapped to [-pi, pi)."""
    e = np.asarray(x, dtype=float) - UPRIGHT
    e[:2] = (e[:2] + np.pi) % (2 * np.pi) - np.pi
    return e


def linearize(p, x_eq=UPRIGHT, eps=1e-6):
    """Central-difference linearisation ``xdot = A dx + B du`` about ``x_eq``."""
    pa = p.to_array()

    def f(x, u):
        a1, a2 = _accel(pa, x[0], x[1], x[2], x[3], u[0], u[1])
        return np.array([x[2], x[3], a1, a2])

    x_eq = np.asarray(x_eq, dtype=float)
    A = np.zeros((4, 4))
    B = np.zeros((4, 2))
    for i in range(4):
        d = np.zeros(4)
        d[i] = eps
        A[:, i] = (f(x_eq + d, np.zeros(2)) - f(x_eq - d, np.zeros(2))) / (2 * eps)
    for i in range(2):
        d = np.zeros(2)
        d[i] = eps
        B[:, i] = (f(x_eq, d) - f(x_eq, -d)) / (2 * eps)
    return A, B


def lqr(A, B, Q, R):
    """Continuous-time LQR gain ``K`` and Riccati solution ``S``."""
    try:
        S = scipy.linalg.solve_continuous_are(A, B, Q, R)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError(f"Riccati solve failed: {exc}") from exc
    if not np.all(np.isfinite(S)):
        raise np.linalg.LinAlgError("Riccati solution is not finite")
    K = np.linalg.solve(R, B.T @ S)
    # Newton-Kleinman refinement; the Schur solver leaves ~1e-8 residuals on stiff cases
    for _ in range(2):
        Acl = A - B @ K
        S = scipy.linalg.solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K))
        S = 0.5 * (S + S.T)
        K = np.linalg.solve(R, B.T @ S)
    return K, S


class EnergyLQRController(Controller):
    """Energy pumping swing-up with an LQR catch around the upright pose.

    Far from upright the active joint pumps total energy towards the upright
    level, ``u = k_energy (E_up - E) qd_a - k_damp qd_p``, with a small kick
    to leave the resting state. When ``e' S e < rho_in`` the LQR takes over
    and keeps control until ``e' S e > rho_out``.

    The LQR is designed on the frictionless linearisation of the nominal
    model; Coulomb friction is left to the passive-joint compensation and
    the feedback.
    """

    def __init__(
        self,
        kind="pendubot",
        model_params=None,
        Q=(10.0, 10.0, 1.0, 1.0),
        R=1.0,
        k_energy=3.0,
        k_damp=0.5,
        kick=1.0,
        rho_in=10.0,
        rho_out=30.0,
    ):
        self.kind = kind
        self.model_params = model_params
        self.Q = Q
        self.R = R
        self.k_energy = k_energy
        self.k_damp = k_damp
        self.kick = kick
        self.rho_in = rho_in
        self.rho_out = rho_out

    def fit(self, X=None, y=None):
        kind = RobotKind(self.kind)
        p = self.model_params or ModelParams()
        A, B = linearize(p.frictionless())
        self.A_ = A
        self.B_ = B[:, [kind.active_joint]]
        self.Q_ = np.diag(np.asarray(self.Q, dtype=float))
        self.R_ = np.atleast_2d(float(self.R))
        self.K_, self.S_ = lqr(self.A_, self.B_, self.Q_, self.R_)
        self.active_ = kind.active_joint
        self.params_ = p
        self.e_up_ = upright_energy(p)
        return self

    def riccati_residual(self):
        A, B, Q, R, S = self.A_, self.B_, self.Q_, self.R_, self.S_
        return A.T @ S + S @ A - S @ B @ np.linalg.solve(R, B.T) @ S + Q

    def reset(self):
        if not hasattr(self, "K_"):
            raise NotFittedError("call fit() before running the controller")
        super().reset()
        self.mode_ = "swingup"
        self.switch_time_ = None
        return self

    def get_control(self, x, t):
        x = np.asarray(x, dtype=float)
        u = np.zeros(2)
        if not np.all(np.isfinite(x)):
            self.fault_ = True
            return u
        e = wrap_to_upright(x)
        v = e @ self.S_ @ e
        if self.mode_ == "swingup" and v < self.rho_in:
            self.mode_ = "balance"
            if self.switch_time_ is None:
                self.switch_time_ = t
        elif self.mode_ == "balance" and v > self.rho_out:
            self.mode_ = "swingup"
        a = self.active_
        if self.mode_ == "balance":
            u[a] = -(self.K_ @ e)[0]
        else:
            gap = self.e_up_ - total_energy(self.params_, x)
            command = self.k_energy * gap * x[2 + a] - self.k_damp * x[3 - a]
            if abs(x[2 + a]) < 0.05 and abs(gap) > 0.5:
                command += self.kick
            u[a] = command
        limit = self.params_.torque_limits()[a]
        u[a] = np.clip(u[a], -limit, limit)
        return u

    def predict(self, X):
        """Stateless commands for a batch of states.

        Without hysteresis memory a state is balanced iff ``e' S e < rho_in``.
        """
        if not hasattr(self, "K_"):
            raise NotFittedError("call fit() before predict()")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], 2))
        for i, x in enumerate(X):
            self.reset()
            out[i] = self.get_control(x, 0.0)
        self.reset()
        return out


def energy_lqr_baseline(kind="pendubot", p=None, **kwargs):
    """Fitted reference controller for ``kind`` on model ``p``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the Riccati equation has no stabilising solution.
    """
    return EnergyLQRController(kind=kind, model_params=p, **kwargs).fit()


def zero_policy(hidden=(16,), history_window=0):
    return PolicyParams.zeros(hidden, history_window)
