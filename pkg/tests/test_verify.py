import numpy as np
import pytest

from isacbeam.conic import Criterion, Receiver, build, extract
from isacbeam.model import BeamformingSolution
from isacbeam.recover import rank_one_reconstruct
from isacbeam.solver import SolverStatus, solve
from isacbeam.verify import ChainInstance, check_chain, check_feasibility

from conftest import make_channels, make_spec


def _solved_solution(ula, criterion=Criterion.MATCHING, receiver=Receiver.TYPE_I):
    chans = make_channels(7, ula, gamma_db=10.0)
    spec = make_spec(criterion, receiver, chans)
    prog = build(spec)
    res = solve(prog)
    assert res.status is SolverStatus.OPTIMAL
    return rank_one_reconstruct(extract(prog, res.x), chans), chans, spec


def test_check_feasibility_passes_on_solved_instance(ula8):
    sol, _, spec = _solved_solution(ula8)
    rep = check_feasibility(sol, spec)
    assert rep.passed
    assert rep.worst >= -rep.tol
    assert rep.sinr_margins.shape == (5,)


def test_check_feasibility_flags_scaled_down_beams(ula8):
    sol, _, spec = _solved_solution(ula8)
    # halving every information beam breaks the binding SINR rows
    bad = BeamformingSolution(
        info_beamformers=tuple(0.5 * w for w in sol.info_beamformers),
        radar_covariance=sol.radar_covariance, alpha=sol.alpha)
    rep = check_feasibility(bad, spec)
    assert not rep.passed
    assert np.min(rep.sinr_margins) < -rep.tol


def test_check_feasibility_flags_power_overrun(ula8):
    sol, _, spec = _solved_solution(ula8)
    bad = BeamformingSolution(
        info_beamformers=tuple(2.0 * w for w in sol.info_beamformers),
        radar_covariance=sol.radar_covariance, alpha=sol.alpha)
    rep = check_feasibility(bad, spec)
    assert not rep.passed


def test_check_feasibility_maxmin_gain_rows(ula8):
    sol, _, spec = _solved_solution(ula8, Criterion.MAX_MIN, Receiver.TYPE_II)
    rep = check_feasibility(sol, spec)
    assert rep.passed
    assert rep.gain_margins.size > 0


def _instance(f1, f2, f0, t1, t2, t0, los=False):
    return ChainInstance(
        matching={Receiver.TYPE_I: f1, Receiver.TYPE_II: f2,
                  Receiver.NO_RADAR: f0},
        maxmin={Receiver.TYPE_I: t1, Receiver.TYPE_II: t2,
                Receiver.NO_RADAR: t0},
        los=los)


def test_check_chain_accepts_correct_ordering():
    rep = check_chain([_instance(0.5, 0.4, 0.6, 1.0, 1.2, 0.9)])
    assert rep.ok
    assert rep.num_checked == 1


def test_check_chain_flags_violations():
    # matching error of TypeI above NoRadar breaks the chain
    rep = check_chain([_instance(0.7, 0.4, 0.6, 1.0, 1.2, 0.9)])
    assert not rep.ok
    rep = check_chain([_instance(0.5, 0.4, 0.6, 1.0, 0.8, 0.9)])
    assert not rep.ok


def test_check_chain_los_equalities():
    good = _instance(0.5, 0.4, 0.5 * (1 + 1e-7), 1.0, 1.2, 1.0, los=True)
    assert check_chain([good]).ok
    bad = _instance(0.5, 0.4, 0.6, 1.0, 1.2, 1.0, los=True)
    assert not check_chain([bad]).ok


def test_check_chain_skips_infeasible():
    # a None optimal value marks an infeasible design on that realization
    inst = ChainInstance(matching={Receiver.TYPE_I: None,
                                   Receiver.TYPE_II: 0.4,
                                   Receiver.NO_RADAR: 0.6})
    rep = check_chain([inst])
    assert rep.num_infeasible == 1
    assert rep.num_checked == 0
    assert rep.ok
