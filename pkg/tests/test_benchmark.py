import pytest

from dpbench.benchmark import N_TRIALS, evaluate_controller, trial_seed
from dpbench.controllers import ZeroController, energy_lqr_baseline
from dpbench.io import dumps
from dpbench.scoring import score_trajectory
from dpbench.simulation import rollout


def baseline_factory():
    return energy_lqr_baseline("pendubot")


def test_trial_seeds_distinct():
    seeds = [trial_seed(0, i) for i in range(N_TRIALS)]
    assert len(set(seeds)) == N_TRIALS
    assert seeds == [trial_seed(0, i) for i in range(N_TRIALS)]
    assert trial_seed(1, 0) != seeds[0]


def test_nominal_trials_match_single_rollout(params):
    result = evaluate_controller(baseline_factory, "pendubot", n_trials=2, perturb=False)
    ref = score_trajectory(rollout(baseline_factory(), "pendubot", params), params)
    assert [r.score for r in result.reports] == [ref.score, ref.score]
    assert result.row.successes == 2


def test_zero_controller_row():
    row = evaluate_controller(ZeroController, "pendubot", name="zero", n_trials=2).row
    assert row.name == "zero" and row.scores == (0.0, 0.0) and row.successes == 0


def test_evaluation_is_repeatable_and_parallel_safe():
    a = evaluate_controller(baseline_factory, "pendubot", n_trials=3, seed=4)
    b = evaluate_controller(baseline_factory, "pendubot", n_trials=3, seed=4)
    c = evaluate_controller(baseline_factory, "pendubot", n_trials=3, seed=4, n_jobs=2)
    assert dumps(a.to_dict()) == dumps(b.to_dict()) == dumps(c.to_dict())
    assert [t["seed"] for t in a.to_dict()["trials"]] == [trial_seed(4, i) for i in range(3)]


def test_rejects_zero_trials():
    with pytest.raises(ValueError):
        evaluate_controller(baseline_factory, "pendubot", n_trials=0)
