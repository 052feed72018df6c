"""Differential evolution, DE/rand/1/bin with bound clipping."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DeConfig:
    """Settings of a differential evolution run.

    Parameters
    ----------
    bounds : array_like, shape (dim, 2)
        Lower and upper bound per coordinate.
    popsize : int, optional
        Defaults to ``15 * dim``.
    F : float
        Differential weight, ``0 < F < 2``.
    CR : float
        Crossover rate in ``[0, 1]``.
    max_generations : int
    tol : float
        Stop once the spread of population costs is at most
        ``tol * |mean cost|``; 0 disables the test.
    seed : int
    init : array_like, optional
        Initial population ``(popsize, dim)``; sampled uniformly if None.
    """

    bounds: tuple
    popsize: int = None
    F: float = 0.7
    CR: float = 0.9
    max_generations: int = 1000
    tol: float = 0.0
    seed: int = 0
    init: np.ndarray = None

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] < 1:
            raise ValueError("bounds must have shape (dim, 2)")
        if not np.all(np.isfinite(b)) or np.any(b[:, 0] > b[:, 1]):
            raise ValueError("bounds must be finite with lower <= upper")
        if not 0 < self.F < 2:
            raise ValueError("F must lie in (0, 2)")
        if not 0 <= self.CR <= 1:
            raise ValueError("CR must lie in [0, 1]")
        if self.popsize is not None and self.popsize < 4:
            raise ValueError("popsize must be at least 4")
        if self.max_generations < 0:
            raise ValueError("max_generations must be non-negative")

    @property
    def dim(self):
        return len(self.bounds)

    @property
    def population_size(self):
        return self.popsize if self.popsize is not None else 15 * self.dim

    def bounds_array(self):
        return np.asarray(self.bounds, dtype=float)


@dataclass
class DeResult:
    x: np.ndarray
    cost: float
    history: np.ndarray  # rows of (generation, best_cost, mean_cost)
    population: np.ndarray
    costs: np.ndarray
    evaluations: int


def _evaluate(cost_fn, pop, evaluate):
    if evaluate is None:
        costs = [cost_fn(x) for x in pop]
    else:
        costs = evaluate(cost_fn, pop)
    costs = np.asarray(costs, dtype=float)
    return np.where(np.isnan(costs), np.inf, costs)


def differential_evolution(cost_fn, config, evaluate=None, callback=None):
    """Minimise ``cost_fn`` over the box ``config.bounds``.

    Each generation builds, for every member ``i``, the mutant
    ``a + F (b - c)`` from three distinct other members, clips it to the
    bounds, takes binomial crossover with rate ``CR`` (one coordinate is
    always taken from the mutant) and keeps the trial if it is no worse.

    Parameters
    ----------
    cost_fn : callable
        Maps a parameter vector to a scalar; NaN is treated as ``inf``.
    config : DeConfig
    evaluate : callable, optional
        ``evaluate(cost_fn, population)`` returning all costs, for batching
        or parallel evaluation.
    callback : callable, optional
        Called as ``callback(generation, population, costs)``.

    Returns
    -------
    DeResult
    """
    b = config.bounds_array()
    lo, hi = b[:, 0], b[:, 1]
    dim = len(b)
    n = config.population_size
    rng = np.random.default_rng(config.seed)
    if config.init is not None:
        pop = np.clip(np.array(config.init, dtype=float).reshape(n, dim), lo, hi)
    else:
        pop = lo + rng.random((n, dim)) * (hi - lo)
    costs = _evaluate(cost_fn, pop, evaluate)
    evaluations = n
    history = [(0, float(costs.min()), float(np.mean(costs)))]
    if callback is not None:
        callback(0, pop, costs)

    for gen in range(1, config.max_generations + 1):
        if _converged(costs, config.tol):
            break
        # three distinct partners per member, all different from the member
        idx = np.empty((n, 3), dtype=int)
        for i in range(n):
            choices = rng.choice(n - 1, 3, replace=False)
            idx[i] = choices + (choices >= i)
        mutant = pop[idx[:, 0]] + config.F * (pop[idx[:, 1]] - pop[idx[:, 2]])
        mutant = np.clip(mutant, lo, hi)
        cross = rng.random((n, dim)) < config.CR
        cross[np.arange(n), rng.integers(0, dim, n)] = True
        trial = np.where(cross, mutant, pop)
        trial_costs = _evaluate(cost_fn, trial, evaluate)
        evaluations += n
        better = trial_costs <= costs
        pop[better] = trial[better]
        costs[better] = trial_costs[better]
        history.append((gen, float(costs.min()), float(np.mean(costs))))
        if callback is not None:
            callback(gen, pop, costs)

    best = int(np.argmin(costs))
    return DeResult(pop[best].copy(), float(costs[best]), np.array(history), pop, costs, evaluations)


def _converged(costs, tol):
    if tol <= 0 or not np.all(np.isfinite(costs)):
        return False
    return float(np.std(costs)) <= tol * abs(float(np.mean(costs)))
