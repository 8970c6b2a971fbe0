"""Symbol-level Monte Carlo for the transmit signal model.

Draws unit-variance information symbols and pseudorandom radar streams,
forms x = sum_k t_k s_k + s_0, and measures empirical per-user SINR and
empirical beampatterns to cross-check the analytic formulas.  Only second
order statistics matter for every measured quantity, so radar streams are
Gaussian regardless of the information constellation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import BeamformingSolution, ReceiverType, steering_matrix
from .recover import radar_beamformers

__all__ = ["Constellation", "SimConfig", "simulate_sinr", "empirical_beampattern"]

BATCH = 1 << 14


class Constellation(enum.Enum):
    GAUSSIAN = "gaussian"
    QPSK = "qpsk"


@dataclass(frozen=True)
class SimConfig:
    num_symbols: int = 100_000
    seed: int = 0
    receiver_type: ReceiverType = ReceiverType.TYPE_I
    constellation: Constellation = Constellation.GAUSSIAN

    def __post_init__(self):
        if self.num_symbols < 1:
            raise ValueError("num_symbols must be >= 1")


def _batch_rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        key=np.array([seed & 0xFFFFFFFFFFFFFFFF, batch], dtype=np.uint64)))


def _info_symbols(rng, constellation, shape):
    if constellation is Constellation.QPSK:
        return (rng.choice([-1.0, 1.0], size=shape)
                + 1j * rng.choice([-1.0, 1.0], size=shape)) / np.sqrt(2.0)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _batches(cfg: SimConfig):
    done = 0
    batch = 0
    while done < cfg.num_symbols:
        size = min(BATCH, cfg.num_symbols - done)
        yield batch, size
        done += size
        batch += 1


def simulate_sinr(sol: BeamformingSolution, channels, cfg: SimConfig) -> np.ndarray:
    """Empirical per-user SINR over cfg.num_symbols symbol slots.

    Type-II receivers subtract h_i^H s_0 (known radar waveform) before
    measuring; Type-I receivers treat it as interference.
    """
    tmat = np.array(sol.info_beamformers).T if sol.info_beamformers else None
    wr = radar_beamformers(sol.radar_covariance)
    wrmat = np.array(wr).T if wr else None
    k = len(channels)
    sig_pow = np.zeros(k)
    res_pow = np.zeros(k)
    hs = np.array([ch.h.conj() for ch in channels])  # rows are h_i^H
    sigmas = np.array([ch.sigma2 for ch in channels])

    for batch, size in _batches(cfg):
        rng = _batch_rng(cfg.seed, batch)
        s = _info_symbols(rng, cfg.constellation, (k, size))
        hx = (hs @ tmat) @ s if tmat is not None else np.zeros((k, size), complex)
        if wrmat is not None:
            s0 = wrmat @ _gaussian(rng, (wrmat.shape[1], size))
            radar_part = hs @ s0
            if cfg.receiver_type is not ReceiverType.TYPE_II:
                hx = hx + radar_part
        noise = np.sqrt(sigmas)[:, None] * _gaussian(rng, (k, size))
        y = hx + noise
        for i in range(k):
            desired = (hs[i] @ tmat[:, i]) * s[i] if tmat is not None else 0.0
            sig_pow[i] += np.sum(np.abs(desired) ** 2)
            res_pow[i] += np.sum(np.abs(y[i] - desired) ** 2)
    return sig_pow / res_pow


def empirical_beampattern(ula, sol: BeamformingSolution, theta_grid, cfg: SimConfig):
    """Sample-mean of |a(theta)^H x|^2 over the symbol stream."""
    theta_grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    amat = steering_matrix(ula, theta_grid)  # rows are a(theta)^T
    tmat = np.array(sol.info_beamformers).T if sol.info_beamformers else None
    wr = radar_beamformers(sol.radar_covariance)
    wrmat = np.array(wr).T if wr else None
    acc = np.zeros(theta_grid.size)
    for batch, size in _batches(cfg):
        rng = _batch_rng(cfg.seed, batch)
        x = np.zeros((ula.num_antennas, size), complex)
        if tmat is not None:
            x += tmat @ _info_symbols(rng, cfg.constellation, (tmat.shape[1], size))
        if wrmat is not None:
            x += wrmat @ _gaussian(rng, (wrmat.shape[1], size))
        acc += np.sum(np.abs(amat.conj() @ x) ** 2, axis=1)
    return acc / cfg.num_symbols
