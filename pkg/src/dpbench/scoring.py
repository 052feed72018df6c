"""Performance criteria and the success-gated tanh performance score."""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import end_effector_height

SUCCESS_HEIGHT = 0.45


@dataclass(frozen=True)
class WeightSet:
    """Normalisation weights for time, energy, torque cost, smoothness, velocity."""

    w_t: float
    w_E: float
    w_tau_c: float
    w_tau_s: float
    w_v: float
    name: str = "custom"

    def __post_init__(self):
        for value in self.as_array():
            if not value > 0:
                raise ValueError("weights must be positive")

    def as_array(self):
        return np.array([self.w_t, self.w_E, self.w_tau_c, self.w_tau_s, self.w_v])


SIMULATION_WEIGHTS = WeightSet(
    math.pi / 20, math.pi / 60, math.pi / 20, 10 * math.pi, math.pi / 400, name="sim"
)
HARDWARE_WEIGHTS = WeightSet(
    math.pi / 20, math.pi / 60, math.pi / 100, math.pi / 4, math.pi / 400, name="hardware"
)
WEIGHT_PRESETS = {"sim": SIMULATION_WEIGHTS, "hardware": HARDWARE_WEIGHTS}


def get_weights(preset):
    if isinstance(preset, WeightSet):
        return preset
    try:
        return WEIGHT_PRESETS[preset]
    except KeyError:
        raise ValueError(f"unknown weight preset {preset!r}; use one of {list(WEIGHT_PRESETS)}")


@dataclass(frozen=True)
class Criteria:
    success: bool
    swingup_time: float
    energy: float
    torque_cost: float
    torque_smoothness: float
    velocity_cost: float

    def as_array(self):
        return np.array(
            [
                self.swingup_time,
                self.energy,
                self.torque_cost,
                self.torque_smoothness,
                self.velocity_cost,
            ]
        )


@dataclass(frozen=True)
class ScoreReport:
    criteria: Criteria
    weights: WeightSet
    score: float

    def to_dict(self):
        out = asdict(self.criteria)
        out["success"] = bool(out["success"])
        out["score"] = float(self.score)
        out["weight_preset"] = self.weights.name
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        criteria = Criteria(
            success=bool(data["success"]),
            swingup_time=float(data["swingup_time"]),
            energy=float(data["energy"]),
            torque_cost=float(data["torque_cost"]),
            torque_smoothness=float(data["torque_smoothness"]),
            velocity_cost=float(data["velocity_cost"]),
        )
        return cls(criteria, get_weights(data["weight_preset"]), float(data["score"]))


def check_success(traj, p, threshold=SUCCESS_HEIGHT):
    """True iff the tip ends strictly above ``threshold`` (diverged runs fail)."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if traj.diverged:
        return False
    return end_effector_height(p, traj.x[-1]) > threshold


def swingup_time(traj, p, threshold=SUCCESS_HEIGHT):
    """Earliest time from which the tip stays above ``threshold`` to the end.

    Returns the trial length when the final sample is not above threshold.
    """
    above = traj.heights(p) > threshold
    if traj.diverged or not above[-1]:
        return traj.t_final
    below = np.flatnonzero(~above)
    first = 0 if below.size == 0 else below[-1] + 1
    return float(traj.t[first])


def compute_criteria(traj, p, threshold=SUCCESS_HEIGHT):
    """Evaluate the five cost criteria on the applied motor torques.

    Integrals use the left rectangle rule over the ``n - 1`` intervals of
    an ``n``-sample trajectory.
    """
    if len(traj) < 2:
        raise ValueError("criteria need a trajectory with at least two samples")
    dt = traj.dt
    tau = traj.tau[:-1]
    qd = traj.x[:-1, 2:]
    energy = float(np.sum(np.abs(tau * qd)) * dt)
    torque_cost = float(np.sum(tau**2) * dt)
    smoothness = float(np.mean(np.linalg.norm(np.diff(traj.tau, axis=0), axis=1)))
    velocity_cost = float(np.sum(qd**2) * dt)
    return Criteria(
        success=check_success(traj, p, threshold),
        swingup_time=swingup_time(traj, p, threshold),
        energy=energy,
        torque_cost=torque_cost,
        torque_smoothness=smoothness,
        velocity_cost=velocity_cost,
    )


def performance_score(c, w=SIMULATION_WEIGHTS):
    """``success * (1 - mean_i tanh(w_i c_i))`` over the five criteria."""
    w = get_weights(w)
    if not c.success:
        return 0.0
    return float(1.0 - np.sum(np.tanh(w.as_array() * c.as_array())) / 5.0)


def score_trajectory(traj, p, weights=SIMULATION_WEIGHTS, threshold=SUCCESS_HEIGHT):
    w = get_weights(weights)
    c = compute_criteria(traj, p, threshold)
    return ScoreReport(c, w, performance_score(c, w))


def average_score(reports):
    """Mean score over trials."""
    if len(reports) == 0:
        raise ValueError("average_score needs at least one report")
    return float(np.mean([r.score for r in reports]))
