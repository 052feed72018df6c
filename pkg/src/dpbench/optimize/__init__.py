"""Gradient-free optimisation: SNES policy search and DE system identification."""

from .de import DeConfig, DeResult, differential_evolution
from .policy_search import SNESPolicySearch, rollout_with_disturbances, snes_train_policy
from .pretrain import clone_policy
from .snes import SnesState, snes_optimize, snes_step
from .sysid import SysIdDataset, SystemIdentifier, sysid_cost, sysid_multi

__all__ = [
    "DeConfig",
    "DeResult",
    "SNESPolicySearch",
    "SnesState",
    "SysIdDataset",
    "SystemIdentifier",
    "clone_policy",
    "differential_evolution",
    "rollout_with_disturbances",
    "snes_optimize",
    "snes_step",
    "snes_train_policy",
    "sysid_cost",
    "sysid_multi",
]
