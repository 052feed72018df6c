"""SNES policy search against the performance score, with disturbance particles."""

import logging

import numba
import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator

from ..dynamics import ModelParams, RobotKind, _actuate, _clamp_motor, _rk4
from ..perturbations import PerturbationConfig, generate_perturbation_profile
from ..policy import PolicyParams, _fill_features, _mlp, policy_controller
from ..rewards import RewardConfig, evolsac_return, history_sac_return
from ..scoring import SIMULATION_WEIGHTS, SUCCESS_HEIGHT, get_weights, score_trajectory
from ..simulation import DEFAULT_DT, DEFAULT_T_FINAL, ImperfectionConfig, Trajectory, n_steps, rollout
from ..controllers import energy_lqr_baseline
from .pretrain import clone_policy
from .snes import SnesState, snes_step

logger = logging.getLogger(__name__)

FITNESS_CHOICES = ("score", "evolsac", "history_sac")


@numba.njit(cache=True)
def _policy_rollout(pa, active, params, sizes, window, torque_limit, x0, n, dt, pert):
    # mirrors simulation.rollout for an MLP policy without measurement imperfections
    xs = np.empty((n + 1, 4))
    taus = np.empty((n + 1, 2))
    history = np.zeros((max(window, 1), 2))
    features = np.empty(sizes[0])
    x = x0.copy()
    count = 0
    last = n
    diverged = False
    for k in range(n + 1):
        xs[k] = x
        if window > 0:
            if count == 0:
                for f in range(window):
                    history[f, 0] = x[2]
                    history[f, 1] = x[3]
            history[count % window, 0] = x[2]
            history[count % window, 1] = x[3]
            count += 1
        _fill_features(x, history, count, window, features)
        u1, u2 = _mlp(params, sizes, features, torque_limit, torque_limit)
        t1, t2 = _actuate(pa, active, u1, u2, x[2], x[3])
        t1, t2 = _clamp_motor(pa, active, t1, t2)
        taus[k, 0] = t1
        taus[k, 1] = t2
        if k == n:
            break
        x = _rk4(pa, x, t1 + pert[k, 0], t2 + pert[k, 1], dt)
        if not (np.isfinite(x[0]) and np.isfinite(x[1]) and np.isfinite(x[2]) and np.isfinite(x[3])):
            diverged = True
            last = k
            break
    return xs[: last + 1], taus[: last + 1], diverged


def fast_policy_rollout(policy, kind, p, perturbation=None, t_final=DEFAULT_T_FINAL, dt=DEFAULT_DT, x0=None):
    """Compiled equivalent of ``rollout(policy_controller(...), ...)``.

    Only the perturbation imperfection is supported; the result matches the
    generic rollout sample for sample.
    """
    kind = RobotKind(kind)
    n = n_steps(t_final, dt)
    times = np.arange(n + 1) * dt
    pert = np.zeros((n + 1, 2)) if perturbation is None else perturbation.sample(times)
    limit = p.tau_limit1 if kind is RobotKind.PENDUBOT else p.tau_limit2
    x0 = np.zeros(4) if x0 is None else np.asarray(x0, dtype=float)
    xs, taus, diverged = _policy_rollout(
        p.to_array(),
        kind.active_joint,
        policy.params,
        np.asarray(policy.layer_sizes, dtype=np.int64),
        policy.history_window,
        float(limit),
        x0,
        n,
        float(dt),
        pert,
    )
    m = len(xs)
    return Trajectory(times[:m].copy(), xs, taus, taus.copy(), pert[:m].copy(), diverged)


def disturbance_profiles(seed, M, t_final=DEFAULT_T_FINAL, config=None):
    """``M`` perturbation profiles with per-particle seeds derived from ``seed``."""
    config = config or PerturbationConfig()
    return [
        generate_perturbation_profile(np.random.SeedSequence([int(seed), m]), t_final, config)
        for m in range(M)
    ]


def rollout_with_disturbances(
    policy,
    kind,
    p,
    M=8,
    disturbance=None,
    seed=0,
    t_final=DEFAULT_T_FINAL,
    dt=DEFAULT_DT,
    x0=None,
    fast=True,
):
    """Propagate ``M`` closed-loop particles, each under its own drawn disturbance.

    Every particle starts from ``x0``; particle ``m`` receives the profile
    drawn with seed ``(seed, m)`` from ``disturbance`` (a
    ``PerturbationConfig``), added to the policy torque at every step.
    """
    if M < 1:
        raise ValueError("need at least one particle")
    profiles = disturbance_profiles(seed, M, t_final, disturbance)
    if fast:
        return [fast_policy_rollout(policy, kind, p, prof, t_final, dt, x0) for prof in profiles]
    controller = policy_controller(policy, kind, p)
    return [
        rollout(controller, kind, p, ImperfectionConfig(perturbation=prof), t_final, dt, x0)
        for prof in profiles
    ]


def trajectory_fitness(traj, p, kind, fitness="score", weights=SIMULATION_WEIGHTS, reward_config=None, threshold=SUCCESS_HEIGHT):
    """Scalar training signal for one trajectory, higher is better.

    ``"score"`` returns the performance score for successful swing-ups and,
    for failures, a value in [-0.5, 0) that grows with the mean tip height so
    that unsuccessful candidates can still be ranked; diverged runs get -1.
    """
    if fitness == "score":
        report = score_trajectory(traj, p, weights, threshold)
        if report.criteria.success:
            return report.score
        if traj.diverged:
            return -1.0
        mean_h = float(np.mean(traj.heights(p))) / (p.l1 + p.l2)
        return 0.25 * (mean_h - 1.0) - 1e-9
    if traj.diverged:
        return -np.inf
    if fitness == "evolsac":
        return evolsac_return(traj, p, kind, reward_config or RewardConfig())
    if fitness == "history_sac":
        return history_sac_return(traj, p, kind)
    raise ValueError(f"unknown fitness {fitness!r}; choose from {FITNESS_CHOICES}")


class SNESPolicySearch(BaseEstimator):
    """Gradient-free policy optimisation with SNES.

    Each candidate policy is scored by simulating it; with ``robust=True``
    the fitness is the mean over ``n_particles`` rollouts under disturbances
    drawn from ``disturbance`` (fresh draws every generation).

    Parameters
    ----------
    kind : str
    model_params : ModelParams, optional
    fitness : {"score", "evolsac", "history_sac"}
    robust : bool
    n_generations, popsize : int
    sigma0 : float
        Initial step size of every coordinate.
    hidden : tuple of int
        Hidden layer widths, used when ``initial_policy`` is None.
    history_window : {0, 12}
    initial_policy : PolicyParams, optional
        Starting point of the search; overrides ``pretrain``.
    pretrain : {"clone", None}
        Without an ``initial_policy``, ``"clone"`` starts from a policy
        fitted to the energy-shaping + LQR controller and ``None`` from
        all-zero weights. The default ``sigma0`` suits fine-tuning a
        cloned start; searches from zero need a much larger one.
    n_particles : int
    disturbance : PerturbationConfig, optional
    weight_preset : {"sim", "hardware"}
    seed : int
    n_jobs : int
        Parallel candidate evaluation; results do not depend on it.
    """

    def __init__(
        self,
        kind="pendubot",
        model_params=None,
        fitness="score",
        robust=False,
        n_generations=200,
        popsize=16,
        sigma0=0.01,
        hidden=(32,),
        history_window=0,
        initial_policy=None,
        pretrain="clone",
        n_particles=4,
        disturbance=None,
        weight_preset="sim",
        t_final=DEFAULT_T_FINAL,
        dt=DEFAULT_DT,
        seed=0,
        n_jobs=1,
        verbose=0,
    ):
        self.kind = kind
        self.model_params = model_params
        self.fitness = fitness
        self.robust = robust
        self.n_generations = n_generations
        self.popsize = popsize
        self.sigma0 = sigma0
        self.hidden = hidden
        self.history_window = history_window
        self.initial_policy = initial_policy
        self.pretrain = pretrain
        self.n_particles = n_particles
        self.disturbance = disturbance
        self.weight_preset = weight_preset
        self.t_final = t_final
        self.dt = dt
        self.seed = seed
        self.n_jobs = n_jobs
        self.verbose = verbose

    def _template(self):
        if self.initial_policy is not None:
            return self.initial_policy
        if getattr(self, "start_policy_", None) is not None:
            return self.start_policy_
        return PolicyParams.zeros(tuple(self.hidden), self.history_window)

    def _pretrain(self):
        if self.initial_policy is not None or self.pretrain is None:
            return None
        if self.pretrain != "clone":
            raise ValueError(f"unknown pretrain {self.pretrain!r}; use 'clone' or None")
        p = self.model_params or ModelParams()
        teacher = energy_lqr_baseline(self.kind, p)
        policy, _ = clone_policy(teacher, self.kind, p, tuple(self.hidden), self.history_window, seed=self.seed)
        return policy

    def candidate_fitness(self, theta, generation=0):
        """Fitness of parameter vector ``theta`` for the given generation's disturbances."""
        p = self.model_params or ModelParams()
        policy = self._template().with_params(theta)
        weights = get_weights(self.weight_preset)
        if self.robust:
            trajs = rollout_with_disturbances(
                policy,
                self.kind,
                p,
                self.n_particles,
                self.disturbance,
                seed=_particle_seed(self.seed, generation),
                t_final=self.t_final,
                dt=self.dt,
            )
        else:
            trajs = [fast_policy_rollout(policy, self.kind, p, None, self.t_final, self.dt)]
        return float(np.mean([trajectory_fitness(tr, p, self.kind, self.fitness, weights) for tr in trajs]))

    def fit(self, X=None, y=None):
        if self.fitness not in FITNESS_CHOICES:
            raise ValueError(f"unknown fitness {self.fitness!r}")
        self.start_policy_ = None
        self.start_policy_ = self._pretrain()
        template = self._template()
        state = SnesState(template.params, self.sigma0, popsize=self.popsize, seed=self.seed)
        history = []
        for gen in range(self.n_generations):
            state = snes_step(state, None, evaluate=self._evaluator(gen))
            fit = state.last_fitness
            history.append((gen, float(np.max(fit)), float(np.mean(fit)), state.best_fitness))
            if self.verbose and gen % max(1, self.verbose) == 0:
                logger.info("gen %d best %.4f mean %.4f best-ever %.4f", *history[-1])
        self.state_ = state
        self.history_ = np.array(history).reshape(-1, 4)
        self.policy_ = template.with_params(state.best_theta)
        self.best_fitness_ = state.best_fitness
        return self

    def _evaluator(self, generation):
        def evaluate(_, candidates):
            if self.n_jobs == 1:
                return [self.candidate_fitness(c, generation) for c in candidates]
            return Parallel(n_jobs=self.n_jobs)(
                delayed(self.candidate_fitness)(c, generation) for c in candidates
            )

        return evaluate

    def predict(self, X):
        """Torques of the trained policy for a batch of states."""
        p = self.model_params or ModelParams()
        return policy_controller(self.policy_, self.kind, p).predict(X)


def _particle_seed(seed, generation):
    return int(np.random.SeedSequence([int(seed), int(generation), 7]).generate_state(1)[0])


def snes_train_policy(kind="pendubot", p=None, fitness="score", robust=False, **config):
    """Train a policy with SNES and return the best candidate's ``PolicyParams``."""
    search = SNESPolicySearch(kind=kind, model_params=p, fitness=fitness, robust=robust, **config)
    return search.fit().policy_
