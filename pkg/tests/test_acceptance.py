"""Acceptance suite: one PASS/FAIL line per criterion.

The desk-scale sweep (250x50, T = 0.1) takes about a minute and is shared by
criteria 1, 2, 7 and 9; those tests carry the ``slow`` marker.
Run with ``pytest tests/test_acceptance.py -v``.
"""
from functools import partial

import numpy as np
import pytest
from oracles import reference_1d

from brinkve import experiments
from brinkve.btp import reconstruct_velocity, run_btp, solve_pressure
from brinkve.bve import BveState, bve_step, bve_velocity, run_bve
from brinkve.config import parse_config
from brinkve.core import (BoundaryData, constant_profile, frac_flow, initial_saturation,
                          params_for_gamma, total_mobility)
from brinkve.diagnostics import divergence_residual, l2_difference
from brinkve.grid import GridSpec
from brinkve.storage import read_table
from brinkve.transport import TimeStepConfig, cfl_limit

SWEEP = """
[grid]
nx = 250
nz = 50
[model]
model = both
gamma_list = 1, 1/5, 1/25
end_time = 0.1
[physical]
length_L = 5
effective_viscosity_mue = 1e-2
viscosity_ratio_M = 2
"""
GAMMAS = (1.0, 0.2, 0.04)


@pytest.fixture
def verdict(capsys):
    def report(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return report


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    result = experiments.gamma_sweep(parse_config(SWEEP), out)
    assert not result.partial, result.error
    return result, out


@pytest.fixture(scope="module")
def small_runs():
    """Both models for every sweep gamma on 100x20 up to T = 0.05."""
    grid = GridSpec(100, 20)
    runs = []
    for gamma in GAMMAS:
        pr = params_for_gamma(gamma, end_time=0.05)
        runs.append(("btp", gamma, run_btp(pr, grid=grid)))
        runs.append(("bve", gamma, run_bve(pr, grid=grid)))
    return runs


@pytest.mark.slow
def test_criterion_1_gamma_convergence(sweep, verdict):
    result, _ = sweep
    e = result.errors
    ok = e[1] < e[0] and e[2] < e[1] and e[2] <= 0.5 * e[0]
    verdict("criterion 1 (gamma convergence)", ok,
            "e(1)={:.4e} e(1/5)={:.4e} e(1/25)={:.4e} ratio={:.3f} (need < , <, <= 0.5)".format(
                *e, e[2] / e[0]))


@pytest.mark.slow
def test_criterion_2_vertical_equilibrium(sweep, verdict):
    result, _ = sweep
    g = [r["grad_pz_norm"] for r in result.rows]
    ok = g[1] <= g[0] and g[2] <= g[1] and g[2] <= 0.25 * g[0]
    verdict("criterion 2 (vertical equilibrium onset)", ok,
            "|dp/dz| = {:.4e}, {:.4e}, {:.4e}; ratio={:.4f} (need nonincreasing, <= 0.25)".format(
                *g, g[2] / g[0]))


def test_criterion_3_incompressibility(verdict):
    grid = GridSpec(100, 20)
    pr = params_for_gamma(0.04, end_time=0.05)
    bve = run_bve(pr, grid=grid)
    bve_worst = max(max(r.div_residual for r in bve.records),
                    max(divergence_residual(s.V, grid) for s in bve.snapshots))
    cfg = TimeStepConfig()
    btp_worst = max(r.div_residual for r in run_btp(pr, grid=grid, cfg=cfg).records)
    ok = bve_worst <= 1e-13 and btp_worst <= 10 * cfg.cg_tol
    verdict("criterion 3 (discrete incompressibility)", ok,
            f"bve max|div V|={bve_worst:.3e} (<= 1e-13), "
            f"btp relative residual={btp_worst:.3e} (<= {10 * cfg.cg_tol:.0e}), "
            f"{len(bve.records)} bve steps")


def test_criterion_4_conservation(small_runs, verdict):
    worst = max(r.mass_residual for _, _, traj in small_runs for r in traj.records)
    steps = sum(len(traj.records) for _, _, traj in small_runs)
    verdict("criterion 4 (conservation audit)", worst <= 1e-10,
            f"max mass residual {worst:.3e} over {steps} steps of 6 runs (<= 1e-10)")


def test_criterion_5_dimensional_collapse(verdict):
    grid = GridSpec(200, 16)
    bc = BoundaryData(inflow_saturation_profile=partial(constant_profile, value=0.9))
    pr = params_for_gamma(0.04, end_time=0.1)
    X, Z = grid.mesh()
    S0 = initial_saturation(X, Z, bc)
    traj = run_bve(pr, bc, grid)
    ref = reference_1d(S0[:, 0], 0.9, pr.beta1, pr.viscosity_ratio_M, pr.end_time_T,
                       lambda S: pr.u_hat_inflow, stops=(0.5 * pr.end_time_T,))
    err = l2_difference(traj.final.S, np.repeat(ref[:, None], grid.nz, axis=1))

    # step by hand to watch Q on every velocity evaluation
    cfg = TimeStepConfig()
    state = BveState(0.0, 0, S0, bve_velocity(S0, pr, bc))
    q_max = float(np.max(np.abs(state.V.q)))
    while pr.end_time_T - state.time > 1e-12:
        dt = min(cfg.dt_max, cfl_limit(state.V, grid, pr.viscosity_ratio_M, cfg.cfl_number),
                 pr.end_time_T - state.time)
        state = bve_step(state, dt, pr, bc, cfg)
        q_max = max(q_max, float(np.max(np.abs(state.V.q))))
    ok = err <= 1e-10 and q_max <= 1e-13
    verdict("criterion 5 (dimensional collapse)", ok,
            f"L2 error vs 1-D reference {err:.3e} (<= 1e-10), max|Q| {q_max:.3e} (<= 1e-13)")


def test_criterion_6_pressure_analytic(verdict):
    grid = GridSpec(60, 15)
    X, _ = grid.mesh()
    worst = 0.0
    for gamma in (1.0, 0.2, 0.04, 1 / 125):
        for s0 in (0.0, 0.3, 0.9, 1.0):
            pr = params_for_gamma(gamma)
            S = np.full(grid.shape, s0)
            p = solve_pressure(S, pr)
            V = reconstruct_velocity(p, S, pr)
            worst = max(worst, np.max(np.abs(p - (1 - X))),
                        np.max(np.abs(V.u - total_mobility(s0, 2.0))), np.max(np.abs(V.q)))
    verdict("criterion 6 (pressure analytic case)", worst <= 1e-9,
            f"max error in p, U, Q over 16 cases {worst:.3e} (<= 1e-9)")


@pytest.mark.slow
def test_criterion_7_energy_monitor(sweep, verdict):
    _, out = sweep
    dirs = ["bve"] + [experiments.run_dir_name("btp", g) for g in GAMMAS]
    worst, count = -np.inf, 0
    for d in dirs:
        _, reports = read_table(out / d / "reports.csv")
        for r in reports:
            worst = max(worst, r["energy_E"] - r["energy_bound"])
            count += 1
    verdict("criterion 7 (energy monitor)", worst <= 0.0,
            f"max E(t) - (E(0) + C_inflow) = {worst:.4e} over {count} snapshots (<= 0)")


def test_criterion_8_constitutive_identities(verdict):
    rng = np.random.default_rng(20261015)
    S = rng.random(10_000)
    S[:4] = (0.0, 1.0, 0.5, 1e-8)
    M = np.exp(rng.uniform(np.log(0.05), np.log(20.0), S.size))
    f, lam = frac_flow(S, M), total_mobility(S, M)
    identity = np.max(np.abs(f * lam - M * S**2) / np.maximum(M * S**2, np.finfo(float).tiny))
    floor = np.min(lam / (M / (1 + M)))
    # monotonicity: evaluate each sampled M on a sorted batch of the sampled S
    order = np.sort(S)
    drops = 0.0
    for m in M[:200]:
        v = frac_flow(order, m)
        drops = max(drops, float(np.max((v[:-1] - v[1:]) / np.maximum(v[1:], 1e-300))))
    ok = identity <= 1e-13 and floor >= 1 - 1e-13 and drops <= 1e-13
    verdict("criterion 8 (constitutive identities)", ok,
            f"max rel |f*lam - M S^2| {identity:.2e}, min lam/(M/(1+M)) {floor:.15f}, "
            f"max relative drop of f {drops:.2e} (all at 1e-13)")


@pytest.mark.slow
def test_criterion_9_determinism(sweep, tmp_path, verdict):
    _, out = sweep
    experiments.gamma_sweep(parse_config(SWEEP), tmp_path)
    first = (out / "convergence.csv").read_bytes()
    second = (tmp_path / "convergence.csv").read_bytes()
    verdict("criterion 9 (determinism)", first == second,
            f"convergence tables {'byte-identical' if first == second else 'differ'} "
            f"({len(first)} bytes)")


@pytest.mark.slow
def test_bounded_saturation_in_sweep(sweep):
    _, out = sweep
    for d in ["bve"] + [experiments.run_dir_name("btp", g) for g in GAMMAS]:
        _, steps = read_table(out / d / "steps.csv")
        assert max(r["overshoot"] for r in steps) <= 1e-3


@pytest.mark.slow
def test_time_derivative_energy_is_gamma_uniform(sweep):
    # proxy for the gamma-independent bound on dS/dt: largest over smallest within a factor 3
    _, out = sweep
    peaks = []
    for g in GAMMAS:
        _, steps = read_table(out / experiments.run_dir_name("btp", g) / "steps.csv")
        peaks.append(max(r["dtS_energy"] for r in steps))
    assert max(peaks) <= 3 * min(peaks)
