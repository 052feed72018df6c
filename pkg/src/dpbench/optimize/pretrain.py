"""Behaviour-cloning warm start for policy search.

A teacher controller is rolled out under light disturbances, its commands
on the visited states are labelled statelessly, and an MLP policy is fitted
to them by weighted least squares on the output torque (L-BFGS with an
analytic gradient).
"""

import numpy as np
import scipy.optimize

from ..dynamics import ModelParams, RobotKind
from ..perturbations import PerturbationConfig, generate_perturbation_profile
from ..policy import V_MAX, PolicyParams, n_features
from ..scoring import SUCCESS_HEIGHT
from ..simulation import DEFAULT_DT, DEFAULT_T_FINAL, ImperfectionConfig, rollout

CLONE_DISTURBANCE = PerturbationConfig(amplitude_min=0.2, amplitude_max=2.0)


def batch_features(X, history_window=0):
    """Policy inputs for a batch of states; velocity history is padded with the current frame."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cols = [np.cos(X[:, 0]), np.sin(X[:, 0]), np.cos(X[:, 1]), np.sin(X[:, 1]), X[:, 2] / V_MAX, X[:, 3] / V_MAX]
    F = np.column_stack(cols)
    if history_window:
        F = np.hstack([F, np.tile(X[:, 2:] / V_MAX, (1, history_window))])
    return F


def _unpack(theta, sizes):
    layers = []
    offset = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        W = theta[offset : offset + n_in * n_out].reshape(n_out, n_in)
        offset += n_in * n_out
        layers.append((W, theta[offset : offset + n_out]))
        offset += n_out
    return layers


def mlp_batch_forward(theta, sizes, F):
    """Activations of every layer for a feature batch (last entry is ``tanh`` output)."""
    acts = [F]
    for W, b in _unpack(theta, sizes):
        acts.append(np.tanh(acts[-1] @ W.T + b))
    return acts


def cloning_loss(theta, sizes, F, U, weights, torque_limit):
    """Weighted mean squared torque error and its gradient.

    ``U`` holds target torques of shape ``(n, 2)``; ``weights`` has shape
    ``(n, 2)`` so that an unused output can be given zero weight.
    """
    acts = mlp_batch_forward(theta, sizes, F)
    resid = torque_limit * acts[-1] - U
    norm = weights.sum()
    loss = float(np.sum(weights * resid**2) / norm)
    g = 2.0 * weights * resid * torque_limit / norm
    grads = []
    for (W, _), a_in, a_out in zip(_unpack(theta, sizes)[::-1], acts[-2::-1], acts[:0:-1]):
        dz = g * (1.0 - a_out**2)
        grads.append(np.concatenate([(dz.T @ a_in).ravel(), dz.sum(axis=0)]))
        g = dz @ W
    return loss, np.concatenate(grads[::-1])


def teacher_states(teacher, kind, p, n_rollouts=12, seed=0, t_final=DEFAULT_T_FINAL, dt=DEFAULT_DT, stride=5):
    """States visited by ``teacher`` from hanging, nominal first, then disturbed."""
    states = []
    for i in range(n_rollouts):
        imperfections = None
        if i:
            ss = np.random.SeedSequence([int(seed), i])
            prof = generate_perturbation_profile(ss, t_final, CLONE_DISTURBANCE)
            imperfections = ImperfectionConfig(perturbation=prof, vel_noise_sigma=0.05 * (i % 3), rng_seed=i)
        traj = rollout(teacher, kind, p, imperfections, t_final, dt)
        states.append(traj.x[::stride])
    return np.vstack(states)


def clone_policy(
    teacher,
    kind="pendubot",
    p=None,
    hidden=(32,),
    history_window=0,
    n_rollouts=12,
    upright_weight=5.0,
    init_scale=0.3,
    max_iter=3000,
    seed=0,
):
    """Fit an MLP policy to a teacher controller with a stateless ``predict``.

    Samples whose tip is above the success height get ``upright_weight``,
    which keeps the balancing gains accurate.

    Returns
    -------
    policy : PolicyParams
    loss : float
        Final weighted mean squared torque error.
    """
    kind = RobotKind(kind)
    p = p or ModelParams()
    X = teacher_states(teacher, kind, p, n_rollouts, seed)
    U = np.asarray(teacher.predict(X), dtype=float)
    j = kind.active_joint
    limit = p.torque_limits()[j]
    heights = -p.l1 * np.cos(X[:, 0]) - p.l2 * np.cos(X[:, 0] + X[:, 1])
    weights = np.zeros((len(X), 2))
    weights[:, j] = np.where(heights > SUCCESS_HEIGHT, upright_weight, 1.0)

    sizes = (n_features(history_window), *hidden, 2)
    template = PolicyParams.zeros(tuple(hidden), history_window)
    rng = np.random.default_rng(seed)
    theta0 = init_scale * rng.standard_normal(template.n_params)
    F = batch_features(X, history_window)
    res = scipy.optimize.minimize(
        cloning_loss,
        theta0,
        args=(sizes, F, U, weights, limit),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter},
    )
    return template.with_params(res.x), float(res.fun)


__all__ = [
    "batch_features",
    "clone_policy",
    "cloning_loss",
    "mlp_batch_forward",
    "teacher_states",
]
