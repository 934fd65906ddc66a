"""Full Brinkman two-phase model: pressure solve + IMEX saturation transport.

Per step: IMEX saturation increment with the current velocities, then the
anisotropic pressure equation

    d/dx(lambda dp/dx) + gamma^-2 d/dz(lambda dp/dz) = 0,
    p = p_in at x = 0,  p = p_out at x = 1,  dp/dz = 0 at z = 0, 1,

is solved by TPFA (harmonic face mobilities) and CG, and the face velocities
U = -lambda dp/dx, Q = -(lambda / gamma^2) dp/dz are rebuilt from it.
"""
from dataclasses import dataclass

import numpy as np

from . import diagnostics as diag
from .core import BoundaryData, initial_saturation, total_mobility
from .grid import FaceField, GridSpec, LinearOperatorSpec, cg_solve, harmonic_mean
from .transport import (TimeStepConfig, StepRecord, Trajectory, cfl_limit, check_dt,
                        imex_increment, march)


@dataclass(frozen=True)
class SimState:
    time: float
    step: int
    S: np.ndarray
    p: np.ndarray
    V: FaceField
    increment: np.ndarray | None = None  # dS of the step that produced this state
    flux: FaceField | None = None
    dt: float = 0.0

    @property
    def grid(self):
        return GridSpec.from_shape(self.S.shape)


def pressure_operator(S, params, bc):
    lam = total_mobility(S, params.viscosity_ratio_M)
    nx, nz = lam.shape
    cx = np.empty((nx + 1, nz))
    cx[1:-1] = harmonic_mean(lam[:-1], lam[1:])
    # Dirichlet walls see the boundary cell's mobility
    cx[0] = lam[0]
    cx[-1] = lam[-1]
    cz = np.zeros((nx, nz + 1))
    cz[:, 1:-1] = harmonic_mean(lam[:, :-1], lam[:, 1:]) / params.gamma**2
    return LinearOperatorSpec(cx, cz, shift=0.0,
                              bc={"left": bc.pressure_inflow, "right": bc.pressure_outflow})


def solve_pressure(S, params, bc=None, cfg=None, p0=None):
    bc = bc or BoundaryData()
    cfg = cfg or TimeStepConfig()
    op = pressure_operator(S, params, bc)
    return cg_solve(op, np.zeros(op.grid.shape), tol=cfg.cg_tol,
                    max_iter=cfg.max_iter(op.grid), x0=p0)


def reconstruct_velocity(p, S, params, bc=None):
    bc = bc or BoundaryData()
    op = pressure_operator(S, params, bc)
    fx, fz = op.face_fluxes(p)
    q = -fz
    q[:, 0] = 0.0
    q[:, -1] = 0.0
    return FaceField(-fx, q)


def pressure_lift(S, params, bc=None):
    return pressure_operator(S, params, bc or BoundaryData()).lift()


def btp_step(state, dt, params, bc=None, cfg=None):
    bc = bc or BoundaryData()
    cfg = cfg or TimeStepConfig()
    grid = state.grid
    check_dt(dt, state.V, grid, params, cfg)
    s_in = bc.inflow_saturation(grid.z_centers)
    dS, flux = imex_increment(state.S, state.V, dt, params, s_in, cfg)
    S = state.S + dS
    p = solve_pressure(S, params, bc, cfg, p0=state.p)
    V = reconstruct_velocity(p, S, params, bc)
    return SimState(state.time + dt, state.step + 1, S, p, V, increment=dS, flux=flux, dt=dt)


def initial_state(params, bc, grid, cfg):
    X, Z = grid.mesh()
    S = np.asarray(initial_saturation(X, Z, bc), dtype=float)
    p = solve_pressure(S, params, bc, cfg)
    return SimState(0.0, 0, S, p, reconstruct_velocity(p, S, params, bc))


def run_btp(params, bc=None, grid=None, cfg=None, snapshot_times=None, initial=None):
    """Integrate the full model to ``params.end_time_T``.

    ``initial`` optionally replaces the default saturation S0 = g(x) S_inflow(z).
    """
    bc = bc or BoundaryData()
    grid = grid or GridSpec(250, 50)
    cfg = cfg or TimeStepConfig()
    traj = Trajectory("btp")
    if initial is None:
        state = initial_state(params, bc, grid, cfg)
    else:
        S = np.array(initial, dtype=float)
        p = solve_pressure(S, params, bc, cfg)
        state = SimState(0.0, 0, S, p, reconstruct_velocity(p, S, params, bc))
    traj.pressure_solves = 1
    s_in = bc.inflow_saturation(grid.z_centers)
    s_max = float(np.max(s_in)) if s_in.size else 0.0
    reference = diag.energy_reference(state.S, state.V, params, s_in)
    since_snapshot = []

    def stable_dt(s):
        return min(cfg.dt_max, cfl_limit(s.V, grid, params.viscosity_ratio_M, cfg.cfl_number))

    def advance(s, dt):
        traj.pressure_solves += 1
        return btp_step(s, dt, params, bc, cfg)

    def on_step(old, new, dt):
        rec = StepRecord(
            step=new.step, time=new.time, dt=dt,
            mass_residual=diag.mass_audit(old.S, new.S, new.flux, dt, params),
            div_residual=diag.relative_divergence_residual(
                new.V, grid, pressure_lift(new.S, params, bc)),
            dtS_energy=diag.dtS_energy(new.increment, dt, params),
            overshoot=diag.overshoot(new.S, s_max),
        )
        traj.records.append(rec)
        since_snapshot.append(rec)

    def on_snapshot(s):
        gx, gz, anisotropy = diag.pressure_anisotropy(s.p, params)
        u_norm, q_norm = diag.velocity_norms(s.V)
        E, bound = diag.energy_estimate(s.S, params, reference)
        div = diag.relative_divergence_residual(s.V, grid, pressure_lift(s.S, params, bc))
        traj.reports.append(diag.EstimateReport(
            time=s.time, energy_E=E, energy_bound=bound, grad_p_x=gx, grad_p_z=gz,
            anisotropy=anisotropy, u_norm=u_norm, q_norm=q_norm,
            dtS_energy=diag.dtS_energy(s.increment, s.dt, params),
            mass_residual=max((r.mass_residual for r in since_snapshot), default=0.0),
            div_residual=div, overshoot=diag.overshoot(s.S, s_max)))
        since_snapshot.clear()

    traj.snapshots = march(state, params.end_time_T, snapshot_times, stable_dt, advance,
                           on_step, on_snapshot)
    return traj
