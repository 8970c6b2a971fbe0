"""Domain types and closed-form evaluators for the ISAC transmit design.

Everything here is the analytic ground truth: ULA steering vectors,
transmit beampattern gains, per-user SINR under both receiver types, the
beampattern matching error, and total transmit power.  Optimized solutions
produced elsewhere in the package are always checked against these
evaluators.

Conventions: angles are radians, powers are linear watts, SINR thresholds
are linear ratios.  Unit conversions happen at the CLI boundary only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ReceiverType",
    "PowerMode",
    "UlaConfig",
    "SystemConfig",
    "UserChannel",
    "DesiredBeampattern",
    "SensingAngleSet",
    "BeamformingSolution",
    "CovarianceSolution",
    "steering_vector",
    "beampattern_gain",
    "matching_error",
    "sinr",
    "total_power",
    "hermitian_part",
    "check_hermitian",
]

HERMITIAN_RTOL = 1e-9


class ReceiverType(enum.Enum):
    """Communication receiver capability with respect to the radar signal.

    TYPE_I receivers cannot cancel the a-priori known radar signal, so it
    contributes interference; TYPE_II receivers subtract it before decoding.
    """

    TYPE_I = "type1"
    TYPE_II = "type2"


class PowerMode(enum.Enum):
    EQUALITY = "equality"
    INEQUALITY = "inequality"


def hermitian_part(x: np.ndarray) -> np.ndarray:
    """Symmetrized copy (X + X^H)/2."""
    return 0.5 * (x + x.conj().T)


def check_hermitian(x: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate Hermitian structure within tolerance, return symmetrized copy.

    Solver output carries rounding asymmetry, so a relative tolerance is
    applied and the returned matrix is exactly Hermitian.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"{name} must be square, got shape {x.shape}")
    scale = np.linalg.norm(x)
    asym = np.linalg.norm(x - x.conj().T)
    if asym > HERMITIAN_RTOL * max(scale, 1e-300) and asym > 1e-14:
        raise ValueError(f"{name} is not Hermitian: asymmetry {asym:.3e} vs scale {scale:.3e}")
    return hermitian_part(x)


@dataclass(frozen=True)
class UlaConfig:
    """Uniform linear array geometry.

    num_antennas: number of elements N (> 1).
    spacing_ratio: element spacing over carrier wavelength, default 0.5.
    """

    num_antennas: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.num_antennas <= 1:
            raise ValueError("num_antennas must exceed 1")
        if self.spacing_ratio <= 0:
            raise ValueError("spacing_ratio must be positive")


@dataclass(frozen=True)
class SystemConfig:
    """Transmit power budget and whether it binds with equality."""

    total_power: float
    power_mode: PowerMode = PowerMode.EQUALITY

    def __post_init__(self):
        if self.total_power <= 0:
            raise ValueError("total_power must be positive")


@dataclass(frozen=True)
class UserChannel:
    """Downlink channel of one single-antenna user.

    h: length-N complex channel vector (linear amplitude scale).
    sigma2: noise variance in watts.
    gamma_min: minimum SINR threshold, linear scale (0 disables the constraint).
    """

    h: np.ndarray
    sigma2: float
    gamma_min: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex).ravel()
        object.__setattr__(self, "h", h)
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if self.gamma_min < 0:
            raise ValueError("gamma_min must be nonnegative")
        if not np.any(h):
            raise ValueError("channel vector must not be all-zero")


@dataclass(frozen=True)
class DesiredBeampattern:
    """Target beampattern values on a strictly increasing angle grid."""

    grid_angles: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid_angles, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "grid_angles", grid)
        object.__setattr__(self, "values", vals)
        if grid.size != vals.size:
            raise ValueError("grid and values must have equal length")
        if grid.size == 0:
            raise ValueError("empty beampattern grid")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("angle grid must be strictly increasing")
        if grid[0] < -np.pi / 2 - 1e-12 or grid[-1] > np.pi / 2 + 1e-12:
            raise ValueError("grid angles must lie within [-pi/2, pi/2]")
        if np.any(vals < 0):
            raise ValueError("desired beampattern values must be nonnegative")

    @property
    def num_points(self) -> int:
        return self.grid_angles.size


@dataclass(frozen=True)
class SensingAngleSet:
    """Angles of interest with positive gain weights for the max-min design."""

    angles: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=float).ravel()
        if ang.size < 1:
            raise ValueError("need at least one sensing angle")
        w = self.weights
        w = np.ones(ang.size) if w is None else np.asarray(w, dtype=float).ravel()
        if w.size != ang.size:
            raise ValueError("weights must match angles in length")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "weights", w)

    @property
    def num_angles(self) -> int:
        return self.angles.size


@dataclass(frozen=True)
class BeamformingSolution:
    """Per-user information beamformers plus a radar signal covariance.

    alpha is only meaningful for the matching criterion, min_gain only for
    the max-min criterion; either may be None.
    """

    info_beamformers: tuple
    radar_covariance: np.ndarray
    alpha: float | None = None
    min_gain: float | None = None
    objective: float | None = None

    def __post_init__(self):
        tks = tuple(np.asarray(t, dtype=complex).ravel() for t in self.info_beamformers)
        object.__setattr__(self, "info_beamformers", tks)
        rd = check_hermitian(self.radar_covariance, "radar_covariance")
        object.__setattr__(self, "radar_covariance", rd)

    @property
    def num_users(self) -> int:
        return len(self.info_beamformers)

    def aggregate_covariance(self) -> np.ndarray:
        """Sum of information beamformer outer products and the radar covariance."""
        agg = np.array(self.radar_covariance)
        for t in self.info_beamformers:
            agg += np.outer(t, t.conj())
        return agg

    def info_covariances(self) -> tuple:
        return tuple(np.outer(t, t.conj()) for t in self.info_beamformers)


@dataclass(frozen=True)
class CovarianceSolution:
    """Relaxed solution: per-user covariances instead of rank-one beamformers."""

    info_covariances: tuple
    radar_covariance: np.ndarray
    alpha: float | None = None
    min_gain: float | None = None
    objective: float | None = None

    def __post_init__(self):
        tks = tuple(check_hermitian(t, f"info_covariances[{i}]")
                    for i, t in enumerate(self.info_covariances))
        object.__setattr__(self, "info_covariances", tks)
        rd = check_hermitian(self.radar_covariance, "radar_covariance")
        object.__setattr__(self, "radar_covariance", rd)

    @property
    def num_users(self) -> int:
        return len(self.info_covariances)

    def aggregate_covariance(self) -> np.ndarray:
        agg = np.array(self.radar_covariance)
        for t in self.info_covariances:
            agg += t
        return agg


def steering_vector(ula: UlaConfig, theta: float) -> np.ndarray:
    """Phase-progression vector of the ULA toward angle theta.

    Entry n is exp(j 2*pi*(d/lambda)*n*sin(theta)); the first entry is
    exactly 1.  theta must lie in [-pi/2, pi/2].
    """
    if abs(theta) > np.pi / 2 + 1e-12:
        raise ValueError(f"angle {theta} outside [-pi/2, pi/2]")
    n = np.arange(ula.num_antennas)
    return np.exp(2j * np.pi * ula.spacing_ratio * n * np.sin(theta))


def steering_matrix(ula: UlaConfig, thetas: np.ndarray) -> np.ndarray:
    """Stack steering vectors for many angles into an (M, N) matrix."""
    thetas = np.asarray(thetas, dtype=float).ravel()
    if np.any(np.abs(thetas) > np.pi / 2 + 1e-12):
        raise ValueError("angles outside [-pi/2, pi/2]")
    n = np.arange(ula.num_antennas)
    return np.exp(2j * np.pi * ula.spacing_ratio * np.outer(np.sin(thetas), n))


def beampattern_gain(ula: UlaConfig, cov: np.ndarray, theta) -> float | np.ndarray:
    """Transmit beampattern gain a(theta)^H X a(theta) of a covariance X.

    Accepts a scalar angle or an array of angles.  The imaginary residue of
    the quadratic form is asserted to be negligible and discarded.
    """
    cov = check_hermitian(cov, "covariance")
    scalar = np.isscalar(theta)
    a = steering_matrix(ula, np.atleast_1d(np.asarray(theta, dtype=float)))
    vals = np.einsum("mi,ij,mj->m", a.conj(), cov, a)
    scale = max(np.linalg.norm(cov), 1e-300)
    if np.max(np.abs(vals.imag)) > 1e-9 * scale:
        raise ValueError("quadratic form has non-negligible imaginary part")
    out = vals.real
    return float(out[0]) if scalar else out


def matching_error(ula: UlaConfig, sol, desired: DesiredBeampattern) -> float:
    """Squared matching error between achieved and scaled desired beampatterns.

    Sum over the grid of |alpha * desired - achieved|^2, where achieved is
    the beampattern of the aggregate transmit covariance.
    """
    if sol.alpha is None:
        raise ValueError("solution carries no scaling coefficient alpha")
    agg = sol.aggregate_covariance()
    gains = beampattern_gain(ula, agg, desired.grid_angles)
    resid = sol.alpha * desired.values - gains
    return float(np.sum(resid ** 2))


def _signal_and_interference(channels, sol, i: int):
    """Per-user signal power and info-signal interference, covariance form."""
    h = channels[i].h
    if isinstance(sol, BeamformingSolution):
        powers = [abs(np.vdot(h, t)) ** 2 for t in sol.info_beamformers]
    else:
        powers = [float(np.real(h.conj() @ t @ h)) for t in sol.info_covariances]
    sig = powers[i]
    interf = sum(powers) - sig
    return sig, interf


def sinr(receiver_type: ReceiverType, channels, sol, i: int) -> float:
    """Analytic SINR of user i for the given solution.

    Type-I receivers see the radar covariance in the denominator; Type-II
    receivers cancel it.  Works on beamformer and covariance solutions alike.
    """
    if not 0 <= i < len(channels):
        raise IndexError(f"user index {i} out of range")
    h = channels[i].h
    sig, interf = _signal_and_interference(channels, sol, i)
    denom = interf + channels[i].sigma2
    if receiver_type is ReceiverType.TYPE_I:
        denom += float(np.real(h.conj() @ sol.radar_covariance @ h))
    return sig / denom


def total_power(sol) -> float:
    """Sum of beamformer powers (or covariance traces) plus the radar trace."""
    if isinstance(sol, BeamformingSolution):
        p = sum(float(np.vdot(t, t).real) for t in sol.info_beamformers)
    else:
        p = sum(float(np.trace(t).real) for t in sol.info_covariances)
    return p + float(np.trace(sol.radar_covariance).real)
