"""Six-criterion robustness evaluation.

Every criterion is a success fraction over a fixed battery of rollouts:
model parameters scaled one at a time, velocity noise, torque noise,
motor responsiveness, measurement delay and random perturbation profiles.
The robustness score is their plain mean.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .dynamics import ModelParams, RobotKind
from .perturbations import PerturbationConfig, generate_perturbation_profile
from .scoring import SUCCESS_HEIGHT, check_success
from .simulation import DEFAULT_DT, DEFAULT_T_FINAL, ImperfectionConfig, rollout

N_SWEEP = 21
N_PROFILES = 50
MODEL_PARAMETERS = ("m1", "m2", "l1", "l2", "r1", "r2", "I1", "I2", "b1", "b2")
SCALAR_CRITERIA = ("vel_noise", "tau_noise", "tau_resp", "delay")
CRITERIA = ("model",) + SCALAR_CRITERIA + ("perturbation",)
REPORT_KEYS = ("c_m", "c_v_noise", "c_tau_noise", "c_tau_resp", "c_d", "c_p")

# severity ranges, benign endpoint first
DEFAULT_RANGES = {
    "model": (0.75, 1.25),
    "vel_noise": (0.0, 0.5),
    "tau_noise": (0.0, 0.5),
    "tau_resp": (1.0, 0.2),
    "delay": (0.0, 0.05),
}
_IMPERFECTION_FIELD = {
    "vel_noise": "vel_noise_sigma",
    "tau_noise": "torque_noise_sigma",
    "tau_resp": "k_resp",
    "delay": "delay",
}


@dataclass(frozen=True)
class SweepSpec:
    """Severity grid of one criterion.

    For ``"model"`` the values are scale factors applied one parameter at a
    time to every name in ``parameters``; for ``"perturbation"`` only
    ``n_profiles`` and ``perturbation`` matter.
    """

    criterion: str
    values: tuple = None
    parameters: tuple = MODEL_PARAMETERS
    n_profiles: int = N_PROFILES
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}; choose from {CRITERIA}")
        if self.values is None and self.criterion != "perturbation":
            lo, hi = DEFAULT_RANGES[self.criterion]
            object.__setattr__(self, "values", tuple(np.linspace(lo, hi, N_SWEEP).tolist()))
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        unknown = set(self.parameters) - set(MODEL_PARAMETERS)
        if unknown:
            raise ValueError(f"cannot sweep {sorted(unknown)}")
        if self.n_profiles < 1:
            raise ValueError("n_profiles must be positive")

    @property
    def n_rollouts(self):
        if self.criterion == "model":
            return len(self.values) * len(self.parameters)
        if self.criterion == "perturbation":
            return self.n_profiles
        return len(self.values)


def default_specs():
    return {c: SweepSpec(c) for c in CRITERIA}


@dataclass(frozen=True)
class SweepPoint:
    criterion: str
    severity: float
    success: bool


@dataclass(frozen=True)
class RobustnessReport:
    """Six success fractions and their mean."""

    c_m: float
    c_v_noise: float
    c_tau_noise: float
    c_tau_resp: float
    c_d: float
    c_p: float
    final: float
    points: tuple = ()

    @property
    def n_rollouts(self):
        return len(self.points)

    def fractions(self):
        return tuple(getattr(self, k) for k in REPORT_KEYS)

    def to_dict(self):
        out = {k: float(getattr(self, k)) for k in REPORT_KEYS}
        out["final"] = float(self.final)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def points_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["criterion", "severity", "success"])
        for pt in self.points:
            writer.writerow([pt.criterion, repr(float(pt.severity)), int(pt.success)])
        return buf.getvalue()


def robustness_score(c_m, c_v_noise, c_tau_noise, c_tau_resp, c_d, c_p, points=()):
    """Combine the six fractions into a report; ``final`` is their mean.

    Raises
    ------
    ValueError
        If a fraction lies outside ``[0, 1]``.
    """
    parts = (c_m, c_v_noise, c_tau_noise, c_tau_resp, c_d, c_p)
    for name, v in zip(REPORT_KEYS, parts):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} = {v} is not a fraction in [0, 1]")
    final = (c_m + c_v_noise + c_tau_noise + c_tau_resp + c_d + c_p) / 6.0
    return RobustnessReport(*(float(v) for v in parts), float(final), tuple(points))


def point_seed(master_seed, criterion, index):
    """Per-point seed derived from ``(master seed, criterion, index)``."""
    ss = np.random.SeedSequence([int(master_seed), CRITERIA.index(criterion), int(index)])
    return int(ss.generate_state(1)[0])


def _run_point(factory, kind, p_sim, imperfections, t_final, dt, threshold):
    controller = factory()
    traj = rollout(controller, kind, p_sim, imperfections, t_final, dt)
    return bool(check_success(traj, p_sim, threshold))


def _tasks_model(spec, p):
    tasks = []
    for name in spec.parameters:
        for scale in spec.values:
            p_sim = p.replace(**{name: getattr(p, name) * scale})
            tasks.append((f"model:{name}", scale, p_sim, None))
    return tasks


def _tasks_scalar(spec, p, seed):
    attr = _IMPERFECTION_FIELD[spec.criterion]
    return [
        (
            spec.criterion,
            value,
            p,
            ImperfectionConfig(**{attr: value}, rng_seed=point_seed(seed, spec.criterion, i)),
        )
        for i, value in enumerate(spec.values)
    ]


def _tasks_perturbation(spec, p, seed, t_final):
    tasks = []
    for i in range(spec.n_profiles):
        prof = generate_perturbation_profile(point_seed(seed, "perturbation", i), t_final, spec.perturbation)
        tasks.append(("perturbation", float(i), p, ImperfectionConfig(perturbation=prof)))
    return tasks


def _tasks(spec, p, seed, t_final):
    if spec.criterion == "model":
        return _tasks_model(spec, p)
    if spec.criterion == "perturbation":
        return _tasks_perturbation(spec, p, seed, t_final)
    return _tasks_scalar(spec, p, seed)


def _run(factory, kind, tasks, t_final, dt, threshold, n_jobs):
    if n_jobs == 1:
        flags = [_run_point(factory, kind, p_sim, imp, t_final, dt, threshold) for _, _, p_sim, imp in tasks]
    else:
        flags = Parallel(n_jobs=n_jobs)(
            delayed(_run_point)(factory, kind, p_sim, imp, t_final, dt, threshold) for _, _, p_sim, imp in tasks
        )
    return [SweepPoint(c, float(sev), bool(ok)) for (c, sev, _, _), ok in zip(tasks, flags)]


def evaluate_criterion(
    factory,
    kind,
    p=None,
    spec=None,
    seed=0,
    t_final=DEFAULT_T_FINAL,
    dt=DEFAULT_DT,
    threshold=SUCCESS_HEIGHT,
    n_jobs=1,
):
    """Success fraction and per-point records of one criterion.

    ``factory()`` must return a fresh controller built on the nominal model;
    only the simulated plant is altered.
    """
    p = p or ModelParams()
    kind = RobotKind(kind)
    points = _run(factory, kind, _tasks(spec, p, seed, t_final), t_final, dt, threshold, n_jobs)
    return float(np.mean([pt.success for pt in points])), points


def sweep_model_inaccuracies(factory, kind, p=None, spec=None, **kwargs):
    """Fraction of successes with each model parameter scaled in turn."""
    return evaluate_criterion(factory, kind, p, spec or SweepSpec("model"), **kwargs)[0]


def sweep_scalar(factory, kind, criterion, p=None, spec=None, **kwargs):
    """Fraction of successes over the severity grid of a scalar imperfection."""
    if criterion not in SCALAR_CRITERIA:
        raise ValueError(f"{criterion!r} is not one of {SCALAR_CRITERIA}")
    spec = spec or SweepSpec(criterion)
    if spec.criterion != criterion:
        raise ValueError("spec criterion does not match")
    return evaluate_criterion(factory, kind, p, spec, **kwargs)[0]


def eval_perturbations(factory, kind, p=None, spec=None, **kwargs):
    """Fraction of successes under random perturbation profiles."""
    return evaluate_criterion(factory, kind, p, spec or SweepSpec("perturbation"), **kwargs)[0]


def evaluate_robustness(
    factory,
    kind,
    p=None,
    specs=None,
    seed=0,
    t_final=DEFAULT_T_FINAL,
    dt=DEFAULT_DT,
    threshold=SUCCESS_HEIGHT,
    n_jobs=1,
):
    """Run all six criteria and aggregate them.

    Parameters
    ----------
    factory : callable
        Zero-argument callable returning a fresh controller.
    specs : dict, optional
        Criterion name to ``SweepSpec``; missing criteria use defaults.
    seed : int
        Master seed; per-point seeds derive from it, so the report does not
        depend on ``n_jobs``.
    """
    merged = default_specs()
    merged.update(specs or {})
    fractions = []
    points = []
    for criterion in CRITERIA:
        frac, pts = evaluate_criterion(
            factory, kind, p, merged[criterion], seed, t_final, dt, threshold, n_jobs
        )
        fractions.append(frac)
        points.extend(pts)
    return robustness_score(*fractions, points=points)
