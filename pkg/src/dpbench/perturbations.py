"""Gaussian torque bump profiles applied as external disturbances."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_random_state


@dataclass(frozen=True)
class PerturbationConfig:
    """Sampling ranges for random perturbation profiles.

    Amplitudes are drawn uniformly from ``[amplitude_min, amplitude_max]``
    and given a random sign; widths ``sigma_t`` uniformly from
    ``[sigma_min, sigma_max]``; the number of bumps uniformly from
    ``[n_min, n_max]``.
    """

    n_min: int = 3
    n_max: int = 3
    amplitude_min: float = 0.5
    amplitude_max: float = 5.0
    sigma_min: float = 0.05
    sigma_max: float = 0.2

    def __post_init__(self):
        if not 0 <= self.n_min <= self.n_max:
            raise ValueError("need 0 <= n_min <= n_max")
        if not 0 <= self.amplitude_min <= self.amplitude_max:
            raise ValueError("need 0 <= amplitude_min <= amplitude_max")
        if not 0 < self.sigma_min <= self.sigma_max:
            raise ValueError("need 0 < sigma_min <= sigma_max")

    def scaled(self, factor):
        """Copy with both amplitude bounds multiplied by ``factor``."""
        return PerturbationConfig(
            self.n_min,
            self.n_max,
            self.amplitude_min * factor,
            self.amplitude_max * factor,
            self.sigma_min,
            self.sigma_max,
        )


@dataclass(frozen=True, eq=False)
class PerturbationProfile:
    """A sum of Gaussian torque bumps.

    ``bumps`` is an ``(n, 4)`` array with rows ``(t0, amplitude, sigma_t, joint)``.
    """

    bumps: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    seed: object = None

    def __post_init__(self):
        bumps = np.asarray(self.bumps, dtype=float).reshape(-1, 4)
        if np.any(bumps[:, 2] <= 0):
            raise ValueError("bump widths must be positive")
        if not np.all(np.isin(bumps[:, 3], (0.0, 1.0))):
            raise ValueError("bump joint index must be 0 or 1")
        object.__setattr__(self, "bumps", bumps)

    def __eq__(self, other):
        if not isinstance(other, PerturbationProfile):
            return NotImplemented
        return np.array_equal(self.bumps, other.bumps)

    def __call__(self, t):
        """Torque pair at time ``t``."""
        out = np.zeros(2)
        for t0, amp, sig, joint in self.bumps:
            out[int(joint)] += amp * np.exp(-((t - t0) ** 2) / (2.0 * sig**2))
        return out

    def sample(self, times):
        """Torques on a time grid, shape ``(len(times), 2)``."""
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.size, 2))
        for t0, amp, sig, joint in self.bumps:
            out[:, int(joint)] += amp * np.exp(-((times - t0) ** 2) / (2.0 * sig**2))
        return out

    @property
    def is_zero(self):
        return bool(np.all(self.bumps[:, 1] == 0.0))


def generate_perturbation_profile(seed, trial_length, config=None):
    """Draw a reproducible random profile over ``[0, trial_length]``."""
    config = config or PerturbationConfig()
    rng = check_random_state(seed)
    n = int(rng.integers(config.n_min, config.n_max + 1))
    t0 = rng.uniform(0.0, trial_length, size=n)
    amp = rng.uniform(config.amplitude_min, config.amplitude_max, size=n)
    sign = rng.choice([-1.0, 1.0], size=n)
    sig = rng.uniform(config.sigma_min, config.sigma_max, size=n)
    joint = rng.integers(0, 2, size=n).astype(float)
    bumps = np.column_stack([t0, amp * sign, sig, joint])
    return PerturbationProfile(bumps=bumps, seed=seed if not isinstance(seed, np.random.Generator) else None)
