"""Constructive recovery procedures for relaxed covariance solutions.

Turns optimal covariance solutions into implementable beamformers: the
closed-form rank-one information-beam reconstruction, merging the radar
covariance into the information covariances, eigen-decomposing a radar
covariance into beamformers, and collapsing a high-rank covariance into a
single beamformer with the same ULA beampattern via root-based spectral
factorization of its autocorrelation polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BeamformingSolution, CovarianceSolution, hermitian_part

__all__ = [
    "RankReport",
    "rank_one_reconstruct",
    "merge_radar_into_info",
    "radar_beamformers",
    "ula_spectral_factorize",
    "effective_rank",
]

RANK_THRESHOLD = 1e-6
PSD_SLACK = 1e-7
PAIR_TOL = 1e-6
BOUNDARY_TOL = 1e-7
DEFLATE_TOL = 1e-12


@dataclass(frozen=True)
class RankReport:
    eigenvalues: np.ndarray  # descending
    effective_rank: int
    threshold: float


def effective_rank(x: np.ndarray, threshold: float = RANK_THRESHOLD):
    """Number of eigenvalues above threshold * lambda_max, with a report."""
    w = np.linalg.eigvalsh(hermitian_part(np.asarray(x)))[::-1]
    if w[0] <= 0:
        return 0, RankReport(eigenvalues=w, effective_rank=0, threshold=threshold)
    rank = int(np.count_nonzero(w > threshold * w[0]))
    return rank, RankReport(eigenvalues=w, effective_rank=rank, threshold=threshold)


def _fix_phase(w: np.ndarray) -> np.ndarray:
    """Rotate a vector's global phase so its first sizable entry is real >= 0."""
    idx = np.flatnonzero(np.abs(w) > 1e-12 * (1.0 + np.abs(w).max()))
    if idx.size == 0:
        return w
    return w * np.exp(-1j * np.angle(w[idx[0]]))


def rank_one_reconstruct(cov: CovarianceSolution, channels) -> BeamformingSolution:
    """Collapse information covariances to rank-one beamformers.

    t_k = (h_k^H T_k h_k)^{-1/2} T_k h_k, with the residual aggregate
    pushed into the radar covariance.  The aggregate covariance, total
    power, objective value, and every SINR constraint of the source
    problem are preserved; all of this is asserted, not assumed.
    """
    infos = [hermitian_part(t) for t in cov.info_covariances]
    if len(channels) != len(infos):
        raise ValueError("one channel per information covariance required")
    radar = hermitian_part(cov.radar_covariance)
    aggregate = sum(infos) + radar if infos else radar

    beams = []
    for ch, t in zip(channels, infos):
        h = ch.h
        q = float((h.conj() @ t @ h).real)
        if q <= 0:
            if ch.gamma_min > 0:
                raise ValueError(
                    "degenerate h^H T h = 0 with a positive SINR target; "
                    "the source solution cannot have been feasible")
            beams.append(np.zeros_like(h))
            continue
        beams.append(_fix_phase(t @ h / np.sqrt(q)))

    new_radar = aggregate - sum(np.outer(t, t.conj()) for t in beams) \
        if beams else radar
    new_radar = hermitian_part(new_radar)

    scale = float(np.trace(aggregate).real)
    min_eig = np.linalg.eigvalsh(new_radar).min() if new_radar.size else 0.0
    assert min_eig >= -PSD_SLACK * max(scale, 1.0), \
        f"reconstructed radar covariance indefinite: min eig {min_eig:.3e}"

    for ch, t, tk in zip(channels, beams, infos):
        num_new = abs(ch.h.conj() @ t) ** 2
        num_old = float((ch.h.conj() @ tk @ ch.h).real)
        assert abs(num_new - num_old) <= 1e-9 * (1.0 + abs(num_old)), \
            "received signal power not preserved"

    new_aggregate = sum(np.outer(t, t.conj()) for t in beams) + new_radar \
        if beams else new_radar
    assert np.linalg.norm(new_aggregate - aggregate) <= 1e-9 * (1.0 + scale), \
        "aggregate covariance not preserved"
    new_power = sum(float((t.conj() @ t).real) for t in beams) \
        + float(np.trace(new_radar).real)
    assert abs(new_power - scale) <= 1e-9 * (1.0 + scale), "power not preserved"

    return BeamformingSolution(
        info_beamformers=tuple(beams),
        radar_covariance=new_radar,
        alpha=cov.alpha,
        min_gain=cov.min_gain,
        objective=cov.objective,
    )


def merge_radar_into_info(cov: CovarianceSolution, beta=None) -> CovarianceSolution:
    """Absorb the radar covariance into the information covariances.

    T_k <- T_k + beta_k R_d with convex weights beta (uniform by default).
    The aggregate covariance, hence objective and Type-I SINRs, are
    unchanged; the result is a no-radar solution.
    """
    k = len(cov.info_covariances)
    if k == 0:
        raise ValueError("merge requires at least one information covariance")
    if beta is None:
        beta = np.full(k, 1.0 / k)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (k,) or np.any(beta < -1e-12) or abs(beta.sum() - 1.0) > 1e-9:
        raise ValueError("beta must be K nonnegative weights summing to 1")
    radar = hermitian_part(cov.radar_covariance)
    infos = tuple(hermitian_part(t) + b * radar
                  for t, b in zip(cov.info_covariances, beta))
    return CovarianceSolution(
        info_covariances=infos,
        radar_covariance=np.zeros_like(radar),
        alpha=cov.alpha,
        min_gain=cov.min_gain,
        objective=cov.objective,
    )


def radar_beamformers(r_d: np.ndarray, rel_threshold: float = 1e-12) -> list:
    """Eigen-decompose a radar covariance into beamformers sqrt(lam) u."""
    r_d = hermitian_part(np.asarray(r_d))
    w, v = np.linalg.eigh(r_d)
    top = w[-1] if w.size else 0.0
    beams = [_fix_phase(np.sqrt(lam) * v[:, i])
             for i, lam in enumerate(w) if lam > rel_threshold * max(top, 0.0) and lam > 0]
    if beams:
        resid = np.linalg.norm(sum(np.outer(b, b.conj()) for b in beams) - r_d)
        assert resid <= 1e-9 * (1.0 + np.linalg.norm(r_d)), \
            "eigen-beamformers do not reproduce the covariance"
    return beams


def _autocorrelation(t: np.ndarray) -> np.ndarray:
    """d-th subdiagonal sums r_d = sum_k T_{k+d,k}, d = 0..N-1."""
    n = t.shape[0]
    return np.array([np.trace(t, offset=-d) for d in range(n)])


def _pair_roots(roots: np.ndarray):
    """Select one root per conjugate-reciprocal pair, favoring the unit disk.

    Unit-circle roots occur with even multiplicity; half of them are kept.
    Greedy matching on |z_i * conj(z_j) - 1| keeps the policy simple and
    observable; failures raise with the offending residual.
    """
    mods = np.abs(roots)
    boundary = np.abs(mods - 1.0) < BOUNDARY_TOL
    inside = np.flatnonzero(~boundary & (mods < 1.0))
    outside = np.flatnonzero(~boundary & (mods > 1.0))
    bnd = list(np.flatnonzero(boundary))
    if len(inside) != len(outside) or len(bnd) % 2 != 0:
        raise ArithmeticError(
            f"root classification failed: {len(inside)} inside, "
            f"{len(outside)} outside, {len(bnd)} on the boundary")

    selected = []
    unmatched = list(outside)
    for i in inside:
        resid = np.array([abs(roots[i] * np.conj(roots[o]) - 1.0) for o in unmatched])
        j = int(resid.argmin())
        if resid[j] >= PAIR_TOL * (1.0 + abs(roots[i]) ** 2):
            raise ArithmeticError(
                f"no reciprocal partner for root {roots[i]:.6g} "
                f"(best residual {resid[j]:.3e})")
        unmatched.pop(j)
        selected.append(roots[i])
    # boundary roots pair among themselves; keep one per duplicated pair
    while bnd:
        i = bnd.pop(0)
        dist = np.array([abs(roots[i] - roots[j]) for j in bnd])
        j = int(dist.argmin())
        if dist[j] >= PAIR_TOL * (1.0 + abs(roots[i])):
            raise ArithmeticError(
                f"unit-circle root {roots[i]:.6g} has odd multiplicity "
                f"(nearest twin at distance {dist[j]:.3e})")
        bnd.pop(j)
        selected.append(roots[i])
    return np.array(selected)


def ula_spectral_factorize(t: np.ndarray) -> np.ndarray:
    """Single beamformer w with the same ULA beampattern as covariance t.

    Factorizes the (nonnegative) autocorrelation polynomial of t: find the
    roots of the degree-2(N-1) polynomial built from the diagonal sums,
    keep one root of each conjugate-reciprocal pair, and rescale so the
    zero-lag autocorrelation (total power) matches tr(t).  Requires t PSD;
    an indefinite input shows up as a sign change on the probe grid.
    """
    t = hermitian_part(np.asarray(t, dtype=complex))
    n = t.shape[0]
    r = _autocorrelation(t)
    r0 = float(r[0].real)
    if r0 <= 0:
        if np.linalg.norm(t) <= 1e-14:
            return np.zeros(n, dtype=complex)
        raise ArithmeticError("covariance has nonpositive trace")

    # probe the polynomial for negativity (indefinite input)
    phis = np.linspace(-np.pi, np.pi, 512, endpoint=False)
    d = np.arange(1, n)
    p = r0 + 2.0 * (np.cos(np.outer(phis, d)) @ r[1:].real
                    + np.sin(np.outer(phis, d)) @ r[1:].imag)
    if p.min() < -1e-9 * r0:
        raise ArithmeticError(
            f"beampattern goes negative ({p.min():.3e}); input not PSD")

    # drop numerically-zero leading lags to avoid spurious huge roots
    m = n
    while m > 1 and abs(r[m - 1]) < DEFLATE_TOL * r0:
        m -= 1
    if m == 1:
        w = np.zeros(n, dtype=complex)
        w[0] = np.sqrt(r0)
        return w

    # coefficient vector (r_{m-1}, ..., r_0, ..., conj(r_{m-1})), degree high->low
    coeffs = np.concatenate([r[m - 1:0:-1], [r[0]], np.conj(r[1:m])])
    roots = np.roots(coeffs)
    selected = _pair_roots(roots)
    wpoly = np.poly(selected)  # monic, length m
    gamma = np.sqrt(r0 / float(np.vdot(wpoly, wpoly).real))
    w = np.zeros(n, dtype=complex)
    w[:m] = gamma * wpoly[::-1]
    return _fix_phase(w)
