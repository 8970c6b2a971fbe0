"""Scenario-driven command line front end.

Reads a JSON scenario file, runs solve / sweep / beampattern experiments,
and writes CSV data plus a JSON run summary.  Plotting stays out of
process: this module only emits data.

Exit codes: 0 success, 1 config error, 2 infeasible, 3 numerical failure.

CSV column orders (fixed):
  sweep:       variable,value,design,mean_objective,std_objective,
               tightness_rate,mean_solve_time_s,solved,realizations
  beampattern: theta_rad,total,radar,user_1,...,user_K
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (ChannelKind, ChannelScenario, condition_normalize,
                       db_to_linear, dbm_to_watts, gen_los, gen_rayleigh)
from .conic import Criterion, ProblemSpec, Receiver, build, extract
from .model import (DesiredBeampattern, PowerMode, SensingAngleSet,
                    SystemConfig, UlaConfig, beampattern_gain)
from .recover import effective_rank, rank_one_reconstruct
from .solver import SolverStatus, solve
from .verify import check_feasibility

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3

DEFAULT_BEAM_CENTERS = (-np.pi / 3, -np.pi / 6, 0.0, np.pi / 6, np.pi / 3)
DEFAULT_BEAM_WIDTH = np.pi / 18
DEFAULT_GRID_POINTS = 101

SWEEP_VARIABLES = ("gamma_db", "k", "n", "p0_dbm", "pathloss_db")


class ConfigError(ValueError):
    pass


def _get(doc, key, default):
    val = doc.get(key, default)
    return default if val is None else val


def _float(doc, key, default):
    try:
        return float(_get(doc, key, default))
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r} must be a number")


def _int(doc, key, default):
    val = _get(doc, key, default)
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(f"field {key!r} must be an integer")
    return val


def parse_scenario(doc: dict) -> dict:
    """Normalize a scenario document, filling defaults.

    Returns a plain dict of resolved values so sweep points can override
    individual fields before the ProblemSpec is built.
    """
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object")

    crit_name = _get(doc, "criterion", "matching")
    try:
        criterion = Criterion(crit_name)
    except ValueError:
        raise ConfigError(f"unknown criterion {crit_name!r}")
    recv_name = _get(doc, "receiver", "type1")
    try:
        receiver = Receiver(recv_name)
    except ValueError:
        raise ConfigError(f"unknown receiver {recv_name!r}")

    ula_doc = _get(doc, "ula", {})
    sys_doc = _get(doc, "system", {})
    ch_doc = _get(doc, "channels", {})
    us_doc = _get(doc, "users", {})

    if "p0_watts" in sys_doc and "p0_dbm" in sys_doc:
        raise ConfigError("give p0_watts or p0_dbm, not both")
    if "p0_dbm" in sys_doc:
        p0 = dbm_to_watts(_float(sys_doc, "p0_dbm", 20.0))
    else:
        p0 = _float(sys_doc, "p0_watts", 0.1)

    mode_name = sys_doc.get("power_mode")
    if mode_name is None:
        # matching fixes the whole budget; max-min only caps it
        mode = (PowerMode.EQUALITY if criterion is Criterion.MATCHING
                else PowerMode.INEQUALITY)
    else:
        try:
            mode = PowerMode(mode_name)
        except ValueError:
            raise ConfigError(f"unknown power_mode {mode_name!r}")

    kind_name = _get(ch_doc, "kind", "rayleigh")
    try:
        kind = ChannelKind(kind_name)
    except ValueError:
        raise ConfigError(f"unknown channel kind {kind_name!r}")

    out = {
        "criterion": criterion,
        "receiver": receiver,
        "n": _int(ula_doc, "n", 8),
        "spacing_ratio": _float(ula_doc, "spacing_ratio", 0.5),
        "p0": p0,
        "power_mode": mode,
        "kind": kind,
        "pathloss_db": _float(ch_doc, "pathloss_db", 80.0),
        "seed": _int(ch_doc, "seed", 0),
        "user_angles": ch_doc.get("angles"),
        "k": _int(us_doc, "k", 5),
        "gamma_db": _float(us_doc, "gamma_db", 10.0),
        "sigma2_dbm": _float(us_doc, "sigma2_dbm", -70.0),
    }
    if out["n"] < 1 or out["k"] < 0:
        raise ConfigError("n must be >= 1 and k >= 0")

    des_doc = _get(doc, "desired", {})
    centers = np.asarray(_get(des_doc, "beam_centers_rad", DEFAULT_BEAM_CENTERS),
                         dtype=float)
    width = _float(des_doc, "beam_width_rad", DEFAULT_BEAM_WIDTH)
    points = _int(des_doc, "grid_points", DEFAULT_GRID_POINTS)
    if points < 2:
        raise ConfigError("grid_points must be >= 2")
    grid = np.linspace(-np.pi / 2, np.pi / 2, points)
    vals = np.zeros(points)
    for c in centers:
        vals[np.abs(grid - c) <= width / 2 + 1e-12] = 1.0
    out["desired"] = DesiredBeampattern(grid_angles=grid, values=vals)

    sen_doc = _get(doc, "sensing", {})
    if "angles" in sen_doc:
        out["sensing"] = SensingAngleSet(
            angles=np.asarray(sen_doc["angles"], dtype=float),
            weights=(np.asarray(sen_doc["weights"], dtype=float)
                     if sen_doc.get("weights") is not None else None))
    else:
        # default: angles where the desired beampattern is positive
        out["sensing"] = SensingAngleSet(angles=grid[vals > 0])

    sweep = doc.get("sweep")
    if sweep is not None:
        var = sweep.get("variable")
        if var not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        values = sweep.get("values")
        if not values:
            raise ConfigError("sweep values must be a non-empty list")
        out["sweep"] = {"variable": var,
                        "values": [float(v) for v in values],
                        "realizations": _int(sweep, "realizations", 1)}
    else:
        out["sweep"] = None
    return out


def _derive_seed(base: int, sweep_index: int, realization: int) -> int:
    """Deterministic per-instance seed independent of execution order."""
    ss = np.random.SeedSequence([base, sweep_index, realization])
    return int(ss.generate_state(1, np.uint64)[0])


def _make_spec(sc: dict, seed: int) -> tuple:
    """Instantiate (ProblemSpec, channels) from resolved scenario values."""
    ula = UlaConfig(num_antennas=sc["n"], spacing_ratio=sc["spacing_ratio"])
    system = SystemConfig(total_power=sc["p0"], power_mode=sc["power_mode"])
    gamma = db_to_linear(sc["gamma_db"])
    if sc["receiver"] is Receiver.RADAR_ONLY or sc["k"] == 0:
        channels = ()
    else:
        scen = ChannelScenario(kind=sc["kind"],
                               pathloss_db=sc["pathloss_db"],
                               sigma2=dbm_to_watts(sc["sigma2_dbm"]),
                               gamma_min=gamma,
                               user_angles=(tuple(sc["user_angles"])
                                            if sc["user_angles"] else None),
                               seed=seed)
        gen = gen_los if sc["kind"] is ChannelKind.LOS else gen_rayleigh
        channels = tuple(condition_normalize(gen(scen, ula, sc["k"])))
    spec = ProblemSpec(
        criterion=sc["criterion"], receiver=sc["receiver"], ula=ula,
        system=system, channels=channels,
        desired=sc["desired"] if sc["criterion"] is Criterion.MATCHING else None,
        sensing=sc["sensing"] if sc["criterion"] is Criterion.MAX_MIN else None)
    return spec, channels


def _solve_instance(spec: ProblemSpec, channels) -> dict:
    """build -> solve -> extract -> reconstruct -> verify for one instance."""
    prog = build(spec)
    t0 = time.perf_counter()
    res = solve(prog)
    wall = time.perf_counter() - t0
    rec = {"status": res.status.value, "iterations": res.iterations,
           "solve_time_s": wall, "objective": None, "tight": None,
           "sinr_margin": None, "cov": None, "sol": None}
    if res.status is not SolverStatus.OPTIMAL:
        return rec
    cov = extract(prog, res.x)
    rec["objective"] = cov.objective
    rec["cov"] = cov
    if channels:
        # the relaxation is tight when a feasible rank-one solution with the
        # same aggregate covariance (hence the same objective) exists
        sol = rank_one_reconstruct(cov, channels)
        rec["sol"] = sol
        report = check_feasibility(sol, spec)
        rec["sinr_margin"] = float(np.min(report.sinr_margins))
        rec["tight"] = bool(report.passed)
    else:
        rec["tight"] = all(effective_rank(t)[0] == 1 for t in cov.info_covariances)
    return rec


def _config_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_summary(path: Path, doc: dict, extra: dict):
    summary = {"config_hash": _config_hash(doc),
               "scenario": doc,
               "isacbeam_version": __version__,
               "numpy_version": np.__version__}
    summary.update(extra)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    return f"{x:.12g}"


def _load(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path!r}: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object")
    return doc


def cmd_solve(args) -> int:
    doc = _load(args.scenario)
    sc = parse_scenario(doc)
    spec, channels = _make_spec(sc, sc["seed"])
    rec = _solve_instance(spec, channels)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    record = {k: rec[k] for k in
              ("status", "iterations", "solve_time_s", "objective",
               "tight", "sinr_margin")}
    record["seed"] = sc["seed"]
    _write_summary(out / f"{stem}.solve.json", doc,
                   {"command": "solve", "result": record})
    print(f"{rec['status']}  objective={rec['objective']}  tight={rec['tight']}")
    if rec["status"] == SolverStatus.PRIMAL_INFEASIBLE.value:
        return EXIT_INFEASIBLE
    if rec["status"] != SolverStatus.OPTIMAL.value:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc = _load(args.scenario)
    sc = parse_scenario(doc)
    if sc["sweep"] is None:
        raise ConfigError("sweep command requires a sweep section")
    var = sc["sweep"]["variable"]
    reals = sc["sweep"]["realizations"]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem

    rows = []
    any_solved = False
    any_numerical = False
    for si, value in enumerate(sc["sweep"]["values"]):
        point = dict(sc)
        if var in ("k", "n"):
            point[var] = int(round(value))
        elif var == "p0_dbm":
            point["p0"] = dbm_to_watts(value)
        else:
            point[var] = value
        objs, tights, times = [], [], []
        for ri in range(reals):
            seed = _derive_seed(sc["seed"], si, ri)
            spec, channels = _make_spec(point, seed)
            rec = _solve_instance(spec, channels)
            times.append(rec["solve_time_s"])
            if rec["status"] == SolverStatus.OPTIMAL.value:
                objs.append(rec["objective"])
                tights.append(rec["tight"])
            elif rec["status"] != SolverStatus.PRIMAL_INFEASIBLE.value:
                any_numerical = True
        any_solved = any_solved or bool(objs)
        rows.append([var, _fmt(value), sc["receiver"].value,
                     _fmt(np.mean(objs)) if objs else "",
                     _fmt(np.std(objs)) if objs else "",
                     _fmt(np.mean(tights)) if objs else "",
                     _fmt(np.mean(times)),
                     str(len(objs)), str(reals)])

    csv_path = out / f"{stem}.sweep.csv"
    header = ("variable,value,design,mean_objective,std_objective,"
              "tightness_rate,mean_solve_time_s,solved,realizations")
    lines = [header] + [",".join(r) for r in rows]
    csv_path.write_text("\n".join(lines) + "\n")
    _write_summary(out / f"{stem}.sweep.json", doc,
                   {"command": "sweep", "csv": csv_path.name,
                    "base_seed": sc["seed"]})
    print(f"wrote {csv_path}")
    if not any_solved:
        return EXIT_NUMERICAL if any_numerical else EXIT_INFEASIBLE
    return EXIT_OK


def cmd_beampattern(args) -> int:
    doc = _load(args.scenario)
    sc = parse_scenario(doc)
    spec, channels = _make_spec(sc, sc["seed"])
    rec = _solve_instance(spec, channels)
    if rec["status"] == SolverStatus.PRIMAL_INFEASIBLE.value:
        print("infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    if rec["status"] != SolverStatus.OPTIMAL.value:
        print(f"solver failed: {rec['status']}", file=sys.stderr)
        return EXIT_NUMERICAL

    grid = sc["desired"].grid_angles
    sol = rec["sol"] if rec["sol"] is not None else rec["cov"]
    ula = spec.ula
    radar = beampattern_gain(ula, sol.radar_covariance, grid)
    if rec["sol"] is not None:
        parts = [beampattern_gain(ula, np.outer(w, w.conj()), grid)
                 for w in rec["sol"].info_beamformers]
    else:
        parts = [beampattern_gain(ula, t, grid)
                 for t in rec["cov"].info_covariances]
    total = radar + sum(parts) if parts else np.array(radar)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    csv_path = out / f"{stem}.beampattern.csv"
    header = "theta_rad,total,radar" + "".join(
        f",user_{i + 1}" for i in range(len(parts)))
    lines = [header]
    for m, th in enumerate(grid):
        cells = [_fmt(th), _fmt(total[m]), _fmt(radar[m])]
        cells += [_fmt(p[m]) for p in parts]
        lines.append(",".join(cells))
    csv_path.write_text("\n".join(lines) + "\n")
    _write_summary(out / f"{stem}.beampattern.json", doc,
                   {"command": "beampattern", "csv": csv_path.name,
                    "seed": sc["seed"], "objective": rec["objective"]})
    print(f"wrote {csv_path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="isacbeam",
        description="Joint information/radar transmit beamforming designs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("solve", cmd_solve), ("sweep", cmd_sweep),
                     ("beampattern", cmd_beampattern)):
        p = sub.add_parser(name)
        p.add_argument("scenario", help="path to a JSON scenario file")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.set_defaults(func=fn)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
