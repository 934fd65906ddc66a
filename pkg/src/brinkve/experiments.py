"""Experiment drivers: single runs, the gamma sweep and offline diagnostics.

Output layout (one directory per run, the sweep coordinator writes the table)::

    <out>/bve/                     params.ini, S_###.csv, reports.csv, steps.csv
    <out>/btp_gamma_<g>/           ... plus p_###.csv
    <out>/convergence.csv          gamma sweep table
"""
import configparser
import glob
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import diagnostics as diag
from .btp import run_btp
from .bve import run_bve
from .core import BoundaryData, DimensionlessParams
from .errors import ContractViolation, SolverError, StepRejected, ValidationError
from .storage import (CONVERGENCE_COLUMNS, ensure_dir, read_field, read_table, snapshot_name,
                      write_field, write_table)
from .transport import StepRecord

log = logging.getLogger(__name__)

REPORT_COLUMNS = tuple(f.name for f in fields(diag.EstimateReport))
STEP_COLUMNS = tuple(f.name for f in fields(StepRecord))
DIAG_COLUMNS = ("time", "energy_E", "grad_p_x", "grad_p_z", "anisotropy", "overshoot")


def run_dir_name(model, gamma):
    return "bve" if model == "bve" else f"btp_gamma_{gamma!r}"


def run_model(model, params, cfg):
    runner = run_btp if model == "btp" else run_bve
    log.info("running %s: gamma=%r beta1=%r beta2=%r T=%r on %dx%d", model, params.gamma,
             params.beta1, params.beta2, params.end_time_T, cfg.nx, cfg.nz)
    traj = runner(params, BoundaryData(), cfg.grid, cfg.time, cfg.snapshots)
    log.info("%s gamma=%r done: %d steps, max mass residual %.2e", model, params.gamma,
             len(traj.records), traj.mass_residual_max)
    return traj


def write_run(directory, traj, params, cfg):
    ensure_dir(directory)
    with open(os.path.join(directory, "params.ini"), "w", encoding="ascii") as fh:
        fh.write("[run]\n")
        fh.write(f"format = 1\nmodel = {traj.model}\nnx = {cfg.nx}\nnz = {cfg.nz}\n")
        for k, v in asdict(params).items():
            fh.write(f"{k} = {v!r}\n")
    for n, snap in enumerate(traj.snapshots):
        write_field(snap.S, os.path.join(directory, snapshot_name("S", n)), snap.time)
        if traj.model == "btp":
            write_field(snap.p, os.path.join(directory, snapshot_name("p", n)), snap.time)
    write_table(os.path.join(directory, "reports.csv"), REPORT_COLUMNS,
                [r.as_dict() for r in traj.reports], model=traj.model)
    write_table(os.path.join(directory, "steps.csv"), STEP_COLUMNS,
                [asdict(r) for r in traj.records], model=traj.model)


def read_run_params(directory):
    parser = configparser.ConfigParser(interpolation=None)
    parser.read(os.path.join(directory, "params.ini"))
    sec = parser["run"]
    params = DimensionlessParams(**{f.name: float(sec[f.name]) for f in fields(DimensionlessParams)})
    return sec["model"], params


def run_single(cfg, model, gamma=None, output_dir=None):
    gamma = cfg.single_run_gamma(gamma)
    params = cfg.params(gamma)
    traj = run_model(model, params, cfg)
    if output_dir is not None:
        write_run(os.path.join(output_dir, run_dir_name(model, gamma)), traj, params, cfg)
    return traj


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    partial: bool = False
    error: str = ""

    @property
    def errors(self):
        return [r["e_gamma"] for r in self.rows]

    @property
    def monotone(self):
        e = self.errors
        return len(e) > 0 and all(b < a for a, b in zip(e, e[1:]))


def _btp_member(args):
    gamma, cfg = args
    params = cfg.params(gamma)
    return gamma, params, run_model("btp", params, cfg)


def gamma_sweep(cfg, output_dir=None):
    """Run the reduced model once and the full model per gamma; tabulate e(gamma).

    The reduced model uses the parameters of the smallest gamma in the list.
    """
    if cfg.model != "both":
        raise ValidationError("gamma sweep needs model = both", key="model")
    gammas = sorted(cfg.gamma_list, reverse=True)
    result = SweepResult()
    try:
        bve_params = cfg.params(gammas[-1])
        bve = run_model("bve", bve_params, cfg)
        if output_dir is not None:
            write_run(os.path.join(output_dir, run_dir_name("bve", gammas[-1])), bve, bve_params, cfg)
        reference = bve.final.S
        jobs = [(g, cfg) for g in gammas]
        pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
        # results are consumed in gamma order so completed members survive a later failure
        members = pool.map(_btp_member, jobs) if pool else map(_btp_member, jobs)
        try:
            _tabulate(members, reference, result, output_dir, cfg)
        finally:
            if pool:
                pool.shutdown(cancel_futures=True)
    except (SolverError, StepRejected, ContractViolation) as exc:
        result.partial = True
        result.error = str(exc)
        log.error("sweep aborted: %s", exc)
    if output_dir is not None:
        write_convergence_table(os.path.join(output_dir, "convergence.csv"), result)
    return result


def _tabulate(members, reference, result, output_dir, cfg):
    for gamma, params, traj in members:
        last = traj.reports[-1]
        result.rows.append({
            "gamma": gamma,
            "e_gamma": diag.l2_difference(traj.final.S, reference),
            "grad_pz_norm": last.grad_p_z,
            "q_norm": last.q_norm,
            "energy_final": last.energy_E,
            "mass_residual_max": traj.mass_residual_max,
        })
        if output_dir is not None:
            write_run(os.path.join(output_dir, run_dir_name("btp", gamma)), traj, params, cfg)


def write_convergence_table(path, result):
    write_table(path, CONVERGENCE_COLUMNS, result.rows, monotone=int(result.monotone),
                partial=int(result.partial))


def _snapshots(directory, kind):
    return sorted(glob.glob(os.path.join(directory, f"{kind}_[0-9][0-9][0-9].csv")))


def diagnose_run(directory):
    """Recompute the field-based diagnostics of every stored snapshot."""
    model, params = read_run_params(directory)
    s_files = _snapshots(directory, "S")
    p_files = _snapshots(directory, "p")
    rows = []
    for n, path in enumerate(s_files):
        S, time = read_field(path)
        row = {"time": time, "energy_E": diag.energy(S, params), "grad_p_x": 0.0,
               "grad_p_z": 0.0, "anisotropy": 0.0, "overshoot": diag.overshoot(S)}
        if n < len(p_files):
            p, _ = read_field(p_files[n])
            gx, gz, anisotropy = diag.pressure_anisotropy(p, params)
            row.update(grad_p_x=gx, grad_p_z=gz, anisotropy=anisotropy)
        rows.append(row)
    write_table(os.path.join(directory, "diagnostics.csv"), DIAG_COLUMNS, rows, model=model)
    return rows


def diagnose_sweep(output_dir):
    """Recompute e(gamma) from the stored final snapshots.

    Returns ``(result, stored_monotone)``; ``stored_monotone`` is None when no
    convergence table exists.
    """
    bve_dir = os.path.join(output_dir, "bve")
    btp_dirs = glob.glob(os.path.join(output_dir, "btp_gamma_*"))
    for d in [bve_dir] + btp_dirs:
        if os.path.isdir(d):
            diagnose_run(d)
    result = SweepResult()
    if not os.path.isdir(bve_dir) or not btp_dirs:
        return result, None
    reference, _ = read_field(_snapshots(bve_dir, "S")[-1])
    members = []
    for d in btp_dirs:
        _, params = read_run_params(d)
        members.append((params.gamma, d))
    for gamma, d in sorted(members, reverse=True):
        _, params = read_run_params(d)
        S, _ = read_field(_snapshots(d, "S")[-1])
        p, _ = read_field(_snapshots(d, "p")[-1])
        _, gz, _ = diag.pressure_anisotropy(p, params)
        result.rows.append({"gamma": gamma, "e_gamma": diag.l2_difference(S, reference),
                            "grad_pz_norm": gz, "q_norm": float("nan"),
                            "energy_final": diag.energy(S, params),
                            "mass_residual_max": float("nan")})
    stored = None
    table = os.path.join(output_dir, "convergence.csv")
    if os.path.exists(table):
        meta, _ = read_table(table)
        stored = bool(int(meta.get("monotone", "0")))
    write_convergence_table(os.path.join(output_dir, "convergence_check.csv"), result)
    return result, stored


def final_errors(result):
    return np.array(result.errors)
