"""Executable checks of feasibility and the optimal-value ordering relations.

check_feasibility re-evaluates every constraint of a problem on a returned
solution and reports signed margins.  check_chain asserts the cross-design
ordering of optimal values (and the LOS coincidences) over a batch of
solved realizations, excluding and counting infeasible ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic import Criterion, ProblemSpec, Receiver
from .model import (
    PowerMode,
    ReceiverType,
    beampattern_gain,
    sinr,
    total_power,
)

__all__ = ["FeasibilityReport", "check_feasibility",
           "ChainInstance", "ChainReport", "check_chain"]

CHAIN_SLACK = 1e-6
LOS_RTOL = 1e-5


@dataclass
class FeasibilityReport:
    sinr_margins: np.ndarray       # (sinr_i - Gamma_i) / max(Gamma_i, 1)
    power_residual: float          # (P0 - used power) / P0
    power_mode: PowerMode
    psd_min_eigs: np.ndarray       # normalized by total power
    gain_margins: np.ndarray       # weighted gain - t, scaled (MaxMin only)
    tol: float

    @property
    def passed(self) -> bool:
        ok = np.all(self.sinr_margins >= -self.tol)
        ok = ok and np.all(self.psd_min_eigs >= -self.tol)
        ok = ok and np.all(self.gain_margins >= -self.tol)
        if self.power_mode is PowerMode.EQUALITY:
            ok = ok and abs(self.power_residual) <= self.tol
        else:
            ok = ok and self.power_residual >= -self.tol
        return bool(ok)

    @property
    def worst(self) -> float:
        vals = [self.power_residual if self.power_mode is not PowerMode.EQUALITY
                else -abs(self.power_residual)]
        for arr in (self.sinr_margins, self.psd_min_eigs, self.gain_margins):
            if arr.size:
                vals.append(arr.min())
        return float(min(vals))


def _receiver_model(receiver: Receiver) -> ReceiverType:
    return ReceiverType.TYPE_II if receiver is Receiver.TYPE_II else ReceiverType.TYPE_I


def check_feasibility(sol, spec: ProblemSpec, tol: float = 1e-6) -> FeasibilityReport:
    """Signed constraint margins of a solution against its problem spec.

    Accepts beamformer or covariance solutions.  Margins are normalized so
    that tol is meaningful across power scales; nonnegative margins (and a
    power residual matching the power mode) mean feasible.
    """
    p0 = spec.system.total_power
    power = total_power(sol)
    power_residual = (p0 - power) / p0

    margins = []
    rt = _receiver_model(spec.receiver)
    for i, ch in enumerate(spec.channels):
        if ch.gamma_min <= 0:
            continue
        val = sinr(rt, spec.channels, sol, i)
        margins.append((val - ch.gamma_min) / max(ch.gamma_min, 1.0))
    sinr_margins = np.array(margins) if margins else np.zeros(0)

    eigs = []
    covs = getattr(sol, "info_covariances", None)
    if callable(covs):  # beamformer form: rank-one terms are PSD by construction
        covs = None
    if covs is not None:
        for t in covs:
            eigs.append(np.linalg.eigvalsh(t).min())
    eigs.append(np.linalg.eigvalsh(np.atleast_2d(sol.radar_covariance)).min()
                if sol.radar_covariance.size else 0.0)
    psd_min_eigs = np.array(eigs) / max(power, p0)

    if spec.criterion is Criterion.MAX_MIN and sol.min_gain is not None:
        gains = beampattern_gain(spec.ula, _aggregate(sol), spec.sensing.angles)
        weighted = spec.sensing.weights * gains
        scale = 1.0 + abs(sol.min_gain)
        gain_margins = (weighted - sol.min_gain) / scale
    else:
        gain_margins = np.zeros(0)

    return FeasibilityReport(
        sinr_margins=sinr_margins,
        power_residual=power_residual,
        power_mode=spec.system.power_mode,
        psd_min_eigs=psd_min_eigs,
        gain_margins=gain_margins,
        tol=tol,
    )


def _aggregate(sol):
    covs = getattr(sol, "info_covariances", None)
    if callable(covs):
        covs = None
    if covs is not None:
        agg = sum(covs) + sol.radar_covariance if covs else sol.radar_covariance
        return agg
    agg = sol.radar_covariance.astype(complex).copy()
    for t in sol.info_beamformers:
        agg += np.outer(t, t.conj())
    return agg


@dataclass(frozen=True)
class ChainInstance:
    """Optimal values of the three designs on one channel realization.

    matching maps Receiver -> optimal matching error (None if infeasible);
    maxmin maps Receiver -> optimal minimum gain.  los marks realizations
    where the equality propositions additionally apply.
    """
    matching: dict | None = None
    maxmin: dict | None = None
    los: bool = False
    label: str = ""


@dataclass
class ChainReport:
    num_instances: int = 0
    num_checked: int = 0
    num_infeasible: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _ordered(report, label, name, lo, hi, slack):
    """Record a violation unless lo <= hi + slack."""
    if lo > hi + slack * (1.0 + max(abs(lo), abs(hi))):
        report.violations.append(
            f"{label}: {name} ordering violated ({lo:.9e} > {hi:.9e})")


def check_chain(instances, slack: float = CHAIN_SLACK,
                los_rtol: float = LOS_RTOL) -> ChainReport:
    """Verify optimal-value orderings across receiver models.

    Matching errors must satisfy NoRadar >= TypeI >= TypeII and minimum
    gains TypeII >= TypeI >= NoRadar, within slack * (1 + |value|).  On
    LOS realizations the TypeI and NoRadar values must coincide.  A
    realization where any design is infeasible is excluded and counted.
    """
    report = ChainReport(num_instances=len(instances))
    for idx, inst in enumerate(instances):
        label = inst.label or f"instance {idx}"
        groups = [(inst.matching, "matching", True), (inst.maxmin, "maxmin", False)]
        groups = [(vals, name, increasing) for vals, name, increasing in groups
                  if vals is not None]
        if any(v is None for vals, _, _ in groups for v in vals.values()):
            report.num_infeasible += 1
            continue
        report.num_checked += 1
        for vals, name, increasing in groups:
            no_radar = vals.get(Receiver.NO_RADAR)
            type1 = vals.get(Receiver.TYPE_I)
            type2 = vals.get(Receiver.TYPE_II)
            if increasing:
                # a dedicated radar signal and interference cancellation can
                # only reduce the matching error: NoRadar >= TypeI >= TypeII
                if no_radar is not None and type1 is not None:
                    _ordered(report, label, name, type1, no_radar, slack)
                if type1 is not None and type2 is not None:
                    _ordered(report, label, name, type2, type1, slack)
            else:
                if type2 is not None and type1 is not None:
                    _ordered(report, label, name, type1, type2, slack)
                if type1 is not None and no_radar is not None:
                    _ordered(report, label, name, no_radar, type1, slack)
            if inst.los and no_radar is not None and type1 is not None:
                denom = max(abs(no_radar), abs(type1), 1e-30)
                if abs(no_radar - type1) > los_rtol * denom:
                    report.violations.append(
                        f"{label}: {name} LOS equality violated "
                        f"({type1:.9e} vs {no_radar:.9e})")
    return report
