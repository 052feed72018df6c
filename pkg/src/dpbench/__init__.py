"""Swing-up benchmark toolkit for the acrobot and pendubot double pendulum."""

from .controllers import EnergyLQRController, ZeroController, energy_lqr_baseline
from .dynamics import ModelParams, RobotKind, apply_actuation, forward_dynamics, step, total_energy
from .perturbations import PerturbationConfig, PerturbationProfile, generate_perturbation_profile
from .policy import PolicyController, PolicyParams, load_policy, policy_controller, save_policy
from .robustness import RobustnessReport, SweepSpec, evaluate_robustness, robustness_score
from .scoring import (
    HARDWARE_WEIGHTS,
    SIMULATION_WEIGHTS,
    SUCCESS_HEIGHT,
    check_success,
    performance_score,
    score_trajectory,
)
from .simulation import ImperfectionConfig, Trajectory, rollout

__version__ = "0.1.0"

__all__ = [
    "EnergyLQRController",
    "HARDWARE_WEIGHTS",
    "ImperfectionConfig",
    "ModelParams",
    "PerturbationConfig",
    "PerturbationProfile",
    "PolicyController",
    "PolicyParams",
    "RobotKind",
    "RobustnessReport",
    "SIMULATION_WEIGHTS",
    "SUCCESS_HEIGHT",
    "SweepSpec",
    "Trajectory",
    "ZeroController",
    "apply_actuation",
    "check_success",
    "energy_lqr_baseline",
    "evaluate_robustness",
    "forward_dynamics",
    "generate_perturbation_profile",
    "load_policy",
    "performance_score",
    "policy_controller",
    "robustness_score",
    "rollout",
    "save_policy",
    "score_trajectory",
    "step",
    "total_energy",
]
