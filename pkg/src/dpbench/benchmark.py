"""Multi-trial evaluation protocol producing leaderboard rows."""

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .dynamics import ModelParams, RobotKind
from .io import LeaderboardRow
from .perturbations import PerturbationConfig, generate_perturbation_profile
from .scoring import SIMULATION_WEIGHTS, SUCCESS_HEIGHT, get_weights, score_trajectory
from .simulation import DEFAULT_DT, DEFAULT_T_FINAL, ImperfectionConfig, rollout

N_TRIALS = 10
_EVALUATE_STREAM = 101


def trial_seed(master_seed, index):
    ss = np.random.SeedSequence([int(master_seed), _EVALUATE_STREAM, int(index)])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class EvaluationResult:
    name: str
    reports: tuple
    seeds: tuple

    @property
    def row(self):
        return LeaderboardRow(
            self.name,
            tuple(r.score for r in self.reports),
            sum(bool(r.criteria.success) for r in self.reports),
        )

    def to_dict(self):
        return {
            "row": self.row.to_dict(),
            "trials": [dict(r.to_dict(), seed=s) for r, s in zip(self.reports, self.seeds)],
        }


def _trial(factory, kind, p, imperfections, t_final, dt, weights, threshold):
    traj = rollout(factory(), kind, p, imperfections, t_final, dt)
    return score_trajectory(traj, p, weights, threshold)


def evaluate_controller(
    factory,
    kind,
    p=None,
    name="controller",
    n_trials=N_TRIALS,
    seed=0,
    perturbation=None,
    perturb=True,
    weights=SIMULATION_WEIGHTS,
    t_final=DEFAULT_T_FINAL,
    dt=DEFAULT_DT,
    threshold=SUCCESS_HEIGHT,
    n_jobs=1,
):
    """Score ``n_trials`` trials, each under its own seeded perturbation profile.

    With ``perturb=False`` every trial is the nominal one.
    """
    if n_trials < 1:
        raise ValueError("need at least one trial")
    p = p or ModelParams()
    kind = RobotKind(kind)
    weights = get_weights(weights)
    config = perturbation or PerturbationConfig()
    seeds = tuple(trial_seed(seed, i) for i in range(n_trials))
    imps = [
        ImperfectionConfig(perturbation=generate_perturbation_profile(s, t_final, config)) if perturb else None
        for s in seeds
    ]
    args = (t_final, dt, weights, threshold)
    if n_jobs == 1:
        reports = [_trial(factory, kind, p, imp, *args) for imp in imps]
    else:
        reports = Parallel(n_jobs=n_jobs)(delayed(_trial)(factory, kind, p, imp, *args) for imp in imps)
    return EvaluationResult(name, tuple(reports), seeds)
