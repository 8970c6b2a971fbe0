"""Reproducible channel generation for the simulated downlink.

Rayleigh draws use a counter-based PRNG (Philox) keyed per (seed, user),
so Monte Carlo sweeps can be parallelized without stream collisions and
reproduce bit-identically regardless of execution order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import UlaConfig, UserChannel, steering_vector

__all__ = [
    "ChannelKind",
    "ChannelScenario",
    "gen_rayleigh",
    "gen_los",
    "condition_normalize",
    "db_to_linear",
    "dbm_to_watts",
]


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


class ChannelKind(enum.Enum):
    RAYLEIGH = "rayleigh"
    LOS = "los"


@dataclass(frozen=True)
class ChannelScenario:
    """Channel model parameters.

    pathloss_db applies as a scalar power gain 10^(-pathloss_db/10) to every
    user.  For LOS channels user_angles fixes the user directions; if None
    they are drawn uniformly over [-pi/2, pi/2].
    """

    kind: ChannelKind
    pathloss_db: float = 80.0
    sigma2: float = 1e-10
    gamma_min: float = 0.0
    user_angles: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.pathloss_db < 0:
            raise ValueError("pathloss_db must be nonnegative")


def _user_rng(seed: int, user: int) -> np.random.Generator:
    # Philox keyed on (seed, user) gives an independent stream per user.
    return np.random.Generator(np.random.Philox(key=np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, user], dtype=np.uint64)))


def gen_rayleigh(scenario: ChannelScenario, ula: UlaConfig, num_users: int) -> list:
    """Independent circularly-symmetric Gaussian channels with pathloss.

    Each entry has unit variance before the pathloss scaling, so
    E||h||^2 = N * 10^(-pathloss_db/10).
    """
    gain = db_to_linear(-scenario.pathloss_db)
    n = ula.num_antennas
    out = []
    for k in range(num_users):
        rng = _user_rng(scenario.seed, k)
        z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        out.append(UserChannel(h=np.sqrt(gain) * z,
                               sigma2=scenario.sigma2,
                               gamma_min=scenario.gamma_min))
    return out


def gen_los(scenario: ChannelScenario, ula: UlaConfig, num_users: int) -> list:
    """Line-of-sight channels: scaled steering vectors toward user directions."""
    gain = db_to_linear(-scenario.pathloss_db)
    if scenario.user_angles is not None:
        angles = np.asarray(scenario.user_angles, dtype=float)
        if angles.size != num_users:
            raise ValueError("user_angles length must equal num_users")
        if np.any(np.abs(angles) > np.pi / 2 + 1e-12):
            raise ValueError("user angles outside [-pi/2, pi/2]")
    else:
        angles = np.array([_user_rng(scenario.seed, k).uniform(-np.pi / 2, np.pi / 2)
                           for k in range(num_users)])
    return [UserChannel(h=np.sqrt(gain) * steering_vector(ula, th),
                        sigma2=scenario.sigma2,
                        gamma_min=scenario.gamma_min)
            for th in angles]


def condition_normalize(channels) -> list:
    """Rescale each (h, sigma2) pair to noise variance 1.

    SINR is invariant under h -> h/sigma, sigma2 -> 1, and unit noise rows
    condition the cone programs far better than 1e-10-watt ones.
    """
    return [UserChannel(h=ch.h / np.sqrt(ch.sigma2), sigma2=1.0, gamma_min=ch.gamma_min)
            for ch in channels]
