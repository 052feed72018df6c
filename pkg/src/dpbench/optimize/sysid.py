"""Model identification by torque replay and differential evolution.

Recorded torques are replayed open loop through a candidate model from the
recorded initial state; the cost is the squared state error, weighted
linearly from 1 at the first sample to 0.5 at the last one of the trimmed
window.

Link lengths are identified together with their centre of mass: when
``l_i`` is free, ``r_i`` keeps the ratio ``r_i / l_i`` of the base model.
Without that coupling ``l2`` would not enter the joint dynamics at all.
"""

from dataclasses import dataclass, field, replace

import numba
import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator

from ..dynamics import ModelParams, _rk4
from ..simulation import DEFAULT_DT, Trajectory
from .de import DeConfig, differential_evolution

DEFAULT_TRIM = 1.5
DEFAULT_FREE = ("m1", "m2", "l1", "l2")
_COM_OF = {"l1": "r1", "l2": "r2"}


@dataclass(eq=False)
class SysIdDataset:
    """Recorded torque series, states and sampling step of several recordings.

    ``torques[i]`` has shape ``(T_i, 2)`` and ``states[i]`` shape
    ``(T_i, 4)``; the first state row is the replay initial state.
    """

    torques: list
    states: list
    dt: float = DEFAULT_DT
    trim: float = DEFAULT_TRIM
    _trimmed: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if len(self.torques) != len(self.states) or not self.states:
            raise ValueError("need matching, non-empty torque and state lists")
        if not self.dt > 0 or not self.trim > 0:
            raise ValueError("dt and trim must be positive")
        self.torques = [np.ascontiguousarray(t, dtype=float).reshape(-1, 2) for t in self.torques]
        self.states = [np.ascontiguousarray(x, dtype=float).reshape(-1, 4) for x in self.states]
        keep = self.n_keep
        for tau, x in zip(self.torques, self.states):
            if len(tau) != len(x):
                raise ValueError("torque and state series must share length")
            if len(x) < keep:
                raise ValueError(
                    f"recording of {len(x)} samples is shorter than the {self.trim} s trim ({keep} samples)"
                )
        self._trimmed = [(tau[:keep], x[:keep]) for tau, x in zip(self.torques, self.states)]

    @property
    def n_keep(self):
        """Samples inside the trim window, both ends included."""
        return int(np.floor(self.trim / self.dt + 1e-9)) + 1

    def trimmed(self):
        return self._trimmed

    def __len__(self):
        return len(self.states)

    @classmethod
    def from_trajectories(cls, trajectories, trim=DEFAULT_TRIM):
        """Build from ``Trajectory`` recordings, replaying motor plus perturbation torque."""
        trajectories = list(trajectories)
        dt = trajectories[0].dt
        torques = []
        for tr in trajectories:
            tau = tr.tau if tr.tau_pert is None else tr.tau + tr.tau_pert
            torques.append(tau)
        return cls(torques, [tr.x for tr in trajectories], dt, trim)


def trajectory_weights(T):
    """Weights ``1 - 0.5 (t - 1) / (T - 1)`` for samples ``t = 1..T``.

    Raises
    ------
    ValueError
        If ``T < 2``.
    """
    if T < 2:
        raise ValueError("weighting needs at least two samples")
    return 1.0 - 0.5 * np.arange(T) / (T - 1)


def weighted_error(x_sim, x_real):
    """Linearly weighted squared error summed over samples and state components."""
    x_sim = np.asarray(x_sim, dtype=float)
    x_real = np.asarray(x_real, dtype=float)
    if x_sim.shape != x_real.shape:
        raise ValueError("simulated and recorded series differ in shape")
    w = trajectory_weights(len(x_real))
    return float(np.sum(w[:, None] * (x_sim - x_real) ** 2))


@numba.njit(cache=True)
def _replay(pa, x0, torques, dt):
    n = torques.shape[0]
    xs = np.empty((n, 4))
    x = x0.copy()
    xs[0] = x
    for k in range(n - 1):
        x = _rk4(pa, x, torques[k, 0], torques[k, 1], dt)
        xs[k + 1] = x
    return xs


def replay(p, x0, torques, dt):
    """Open-loop simulation of recorded torques; row ``k`` is the state at step ``k``."""
    return _replay(p.to_array(), np.asarray(x0, dtype=float), np.ascontiguousarray(torques, dtype=float), float(dt))


def sysid_cost(params, data):
    """Torque-replay cost of model ``params`` on ``data`` (non-finite replays cost ``inf``)."""
    pa = params.to_array()
    total = 0.0
    for tau, x in data.trimmed():
        xs = _replay(pa, x[0], tau, data.dt)
        if not np.all(np.isfinite(xs)):
            return np.inf
        total += weighted_error(xs, x)
    return total


def params_from_vector(theta, base, free=DEFAULT_FREE):
    """Model with the ``free`` fields set from ``theta``; free lengths carry their COM along."""
    values = base.to_dict()
    for name, v in zip(free, theta):
        values[name] = float(v)
        com = _COM_OF.get(name)
        if com is not None and com not in free:
            values[com] = getattr(base, com) / getattr(base, name) * float(v)
    return ModelParams.from_dict(values)


def relative_bounds(base, free=DEFAULT_FREE, spread=0.5):
    """Box ``[(1 - spread) v, (1 + spread) v]`` around the base value of each free field."""
    return tuple((getattr(base, f) * (1 - spread), getattr(base, f) * (1 + spread)) for f in free)


class _Cost:
    # picklable cost closure for parallel DE evaluation
    def __init__(self, data, base, free):
        self.data = data
        self.base = base
        self.free = free

    def __call__(self, theta):
        try:
            params = params_from_vector(theta, self.base, self.free)
        except ValueError:
            return np.inf
        return sysid_cost(params, self.data)


def _evaluator(n_jobs):
    if n_jobs == 1:
        return None

    def evaluate(cost_fn, population):
        return Parallel(n_jobs=n_jobs)(delayed(cost_fn)(x) for x in population)

    return evaluate


class SystemIdentifier(BaseEstimator):
    """Identify free model parameters from torque-replay recordings with DE.

    Parameters
    ----------
    base_params : ModelParams, optional
        Values of the fixed parameters and centre of the default bounds.
    free : tuple of str
        Fields of ``ModelParams`` to identify.
    bounds : sequence of (low, high), optional
        Defaults to +-``spread`` relative to ``base_params``.
    spread : float
    popsize, F, CR, max_generations, tol, seed
        Passed to ``DeConfig``.
    n_jobs : int
    """

    def __init__(
        self,
        base_params=None,
        free=DEFAULT_FREE,
        bounds=None,
        spread=0.5,
        popsize=None,
        F=0.7,
        CR=0.9,
        max_generations=1000,
        tol=0.0,
        seed=0,
        n_jobs=1,
    ):
        self.base_params = base_params
        self.free = free
        self.bounds = bounds
        self.spread = spread
        self.popsize = popsize
        self.F = F
        self.CR = CR
        self.max_generations = max_generations
        self.tol = tol
        self.seed = seed
        self.n_jobs = n_jobs

    def _config(self, base):
        free = tuple(self.free)
        unknown = set(free) - set(ModelParams.field_names())
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)}")
        bounds = self.bounds if self.bounds is not None else relative_bounds(base, free, self.spread)
        return DeConfig(
            bounds=tuple(map(tuple, bounds)),
            popsize=self.popsize,
            F=self.F,
            CR=self.CR,
            max_generations=self.max_generations,
            tol=self.tol,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        """Identify parameters from ``X``, a ``SysIdDataset``."""
        base = self.base_params or ModelParams()
        config = self._config(base)
        cost = _Cost(X, base, tuple(self.free))
        result = differential_evolution(cost, config, evaluate=_evaluator(self.n_jobs))
        self.result_ = result
        self.theta_ = result.x
        self.params_ = params_from_vector(result.x, base, tuple(self.free))
        self.cost_ = result.cost
        self.history_ = result.history
        return self

    def predict(self, X):
        """Replayed state series of the identified model for every recording in ``X``."""
        return [replay(self.params_, x[0], tau, X.dt) for tau, x in X.trimmed()]

    def score(self, X, y=None):
        """Negative replay cost, so that higher is better."""
        return -sysid_cost(self.params_, X)


@dataclass(frozen=True)
class SysIdSolution:
    params: ModelParams
    cost: float
    seed: int
    history: np.ndarray = field(repr=False, compare=False)


def sysid_multi(data, config=None, k=4, base_params=None, free=DEFAULT_FREE, n_jobs=1):
    """Run ``k`` DE identifications from seeds derived from ``config.seed``.

    Returns
    -------
    list of SysIdSolution
        Distinct solutions sorted by cost (duplicates are dropped).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    base = base_params or ModelParams()
    free = tuple(free)
    config = config or DeConfig(bounds=relative_bounds(base, free))
    cost = _Cost(data, base, free)
    solutions = []
    for i in range(k):
        seed = int(np.random.SeedSequence([int(config.seed), i]).generate_state(1)[0])
        run = replace(config, seed=seed)
        result = differential_evolution(cost, run, evaluate=_evaluator(n_jobs))
        if any(np.array_equal(result.x, s.params.to_array()[_field_index(free)]) for s in solutions):
            continue
        solutions.append(SysIdSolution(params_from_vector(result.x, base, free), result.cost, seed, result.history))
    solutions.sort(key=lambda s: s.cost)
    return solutions


def _field_index(free):
    names = ModelParams.field_names()
    return [names.index(f) for f in free]


def synthetic_dataset(
    p, n_trajectories=5, duration=2.0, dt=DEFAULT_DT, seed=0, trim=DEFAULT_TRIM, amplitude=1.5, noise=0.0
):
    """Recordings of ``p`` driven by random sums of sines on both joints.

    Each recording starts from a random state near hanging and is generated
    with the same integrator used for replay. ``noise`` adds Gaussian
    measurement noise of that std to every state sample except the first.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    torques, states = [], []
    for _ in range(n_trajectories):
        freq = rng.uniform(0.3, 3.0, (3, 2))
        phase = rng.uniform(0, 2 * np.pi, (3, 2))
        amp = rng.uniform(0.2, 1.0, (3, 2)) * amplitude / 3
        tau = np.sum(amp[None] * np.sin(2 * np.pi * freq[None] * t[:, None, None] + phase[None]), axis=1)
        x0 = np.concatenate([rng.uniform(-0.5, 0.5, 2), rng.uniform(-1, 1, 2)])
        x = replay(p, x0, tau, dt)
        if noise > 0:
            x[1:] += noise * rng.standard_normal(x[1:].shape)
        torques.append(tau)
        states.append(x)
    return SysIdDataset(torques, states, dt, trim)


def identified_trajectory(params, data, index=0):
    """``Trajectory`` of the replayed recording ``index`` under ``params``."""
    tau, x = data.trimmed()[index]
    xs = replay(params, x[0], tau, data.dt)
    return Trajectory(np.arange(len(xs)) * data.dt, xs, tau.copy())
