"""Separable natural evolution strategy.

Candidates are ``theta + sigma * z`` with ``z ~ N(0, I)``. After ranking,
step sizes follow the log-normal rule

    sigma_i <- sigma_i * exp(tau * N(0, 1) + tau' * g_sigma_i)

where the per-coordinate term is the utility-weighted natural gradient
``g_sigma_i = sum_k u_k (z_ki**2 - 1)``, and the mean moves along the new
step sizes, ``theta_i <- theta_i + eta * sigma_i * sum_k u_k z_ki``.
"""

from dataclasses import dataclass, field, replace

import numpy as np


def default_popsize(n):
    return 4 + int(3 * np.log(n))


def default_tau_prime(n):
    return 0.5 * (3 + np.log(n)) / (5 * np.sqrt(n))


def rank_utilities(popsize):
    """Fitness-shaping utilities for ranks ``0 (best) .. popsize-1``; they sum to zero."""
    ranks = np.arange(1, popsize + 1)
    raw = np.maximum(0.0, np.log(popsize / 2 + 1) - np.log(ranks))
    return raw / raw.sum() - 1.0 / popsize


@dataclass(eq=False)
class SnesState:
    """Search distribution and bookkeeping of an SNES run."""

    theta: np.ndarray
    sigma: np.ndarray
    popsize: int = None
    tau: float = 0.0
    tau_prime: float = None
    eta_theta: float = 1.0
    generation: int = 0
    seed: int = 0
    best_theta: np.ndarray = None
    best_fitness: float = -np.inf
    evaluations: int = 0
    last_fitness: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.theta = np.array(self.theta, dtype=float).ravel()
        n = self.theta.size
        self.sigma = np.broadcast_to(np.asarray(self.sigma, dtype=float), (n,)).copy()
        if not np.all(self.sigma > 0):
            raise ValueError("sigma must be strictly positive")
        if self.popsize is None:
            self.popsize = default_popsize(n)
        if self.popsize < 4:
            raise ValueError("popsize must be at least 4")
        if self.tau_prime is None:
            self.tau_prime = default_tau_prime(n)
        if self.best_theta is None:
            self.best_theta = self.theta.copy()


def _standard_normal(rng, shape):
    return rng.standard_normal(shape)


def generation_rng(seed, generation):
    return np.random.default_rng([int(seed), int(generation)])


def ask(state, sampler=None):
    """Draw the generation's noise ``z`` (popsize x n) and global draw."""
    sampler = sampler or _standard_normal
    rng = generation_rng(state.seed, state.generation)
    z = np.asarray(sampler(rng, (state.popsize, state.theta.size)), dtype=float)
    g = float(np.asarray(sampler(rng, (1,)), dtype=float)[0])
    return z, g


def tell(state, z, global_draw, fitness):
    """Return the updated state given fitness values (higher is better)."""
    fitness = np.asarray(fitness, dtype=float)
    if fitness.shape != (state.popsize,):
        raise ValueError(f"expected {state.popsize} fitness values, got {fitness.shape}")
    ranked = np.where(np.isfinite(fitness), fitness, -np.inf)
    # stable sort keeps ties (and all non-finite) in sampling order
    order = np.argsort(-ranked, kind="stable")
    u = np.empty(state.popsize)
    u[order] = rank_utilities(state.popsize)

    grad_theta = u @ z
    # u sums to zero, so u @ (z**2 - 1) == u @ z**2; dropping the constant
    # avoids a rounding residue of sum(u) when all draws are zero
    grad_sigma = u @ (z**2)
    sigma = state.sigma * np.exp(state.tau * global_draw + state.tau_prime * grad_sigma)
    theta = state.theta + state.eta_theta * sigma * grad_theta

    best_theta, best_fitness = state.best_theta, state.best_fitness
    i = order[0]
    if ranked[i] > best_fitness:
        best_fitness = float(ranked[i])
        best_theta = state.theta + state.sigma * z[i]
    return replace(
        state,
        theta=theta,
        sigma=sigma,
        generation=state.generation + 1,
        best_theta=best_theta,
        best_fitness=best_fitness,
        evaluations=state.evaluations + state.popsize,
        last_fitness=fitness,
    )


def snes_step(state, fitness_fn, sampler=None, evaluate=None):
    """One SNES generation.

    Parameters
    ----------
    state : SnesState
    fitness_fn : callable
        Maps a parameter vector to a scalar, higher is better. Non-finite
        values rank last.
    sampler : callable, optional
        ``sampler(rng, shape)`` replacing the standard normal draws.
    evaluate : callable, optional
        ``evaluate(fitness_fn, candidates)`` returning all fitness values;
        lets callers batch or parallelise evaluation.
    """
    z, g = ask(state, sampler)
    candidates = state.theta + state.sigma * z
    if evaluate is None:
        fitness = np.array([fitness_fn(c) for c in candidates], dtype=float)
    else:
        fitness = np.asarray(evaluate(fitness_fn, candidates), dtype=float)
    return tell(state, z, g, fitness)


def snes_optimize(fitness_fn, theta0, sigma0=1.0, max_evaluations=10_000, target=None, seed=0, **kwargs):
    """Run SNES until the evaluation budget is spent or ``target`` is reached."""
    state = SnesState(theta0, sigma0, seed=seed, **kwargs)
    history = []
    while state.evaluations + state.popsize <= max_evaluations:
        state = snes_step(state, fitness_fn)
        history.append(state.best_fitness)
        if target is not None and state.best_fitness >= target:
            break
    return state, np.array(history)
