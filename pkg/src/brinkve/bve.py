"""Reduced vertical-equilibrium model: velocities are functionals of S.

    U[S] = u_hat * lambda(S) / int_0^1 lambda(S) dz
    Q[S] = -d/dx int_0^z U[S] dr

Q follows from discrete incompressibility,
Q_{j+1/2} = Q_{j-1/2} - (dz/dx)(U_{i+1/2,j} - U_{i-1/2,j}), starting from the
bottom wall.  ``bve_velocity`` evaluates the same recursion through the
vertical stream function psi_{i,j} = int_0^{z_j} U dz, normalised so that the
top value equals u_hat bitwise in every column; both walls then carry Q = 0
exactly and div(U, Q) is pure round-off.  No pressure is solved.
"""
from dataclasses import dataclass

import numpy as np

from . import diagnostics as diag
from .core import BoundaryData, initial_saturation, total_mobility
from .errors import ContractViolation
from .grid import FaceField, GridSpec, l2_norm, vertical_average
from .transport import (TimeStepConfig, StepRecord, Trajectory, cfl_limit, check_dt,
                        imex_increment, march)

TOP_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class BveState:
    time: float
    step: int
    S: np.ndarray
    V: FaceField
    increment: np.ndarray | None = None
    flux: FaceField | None = None
    dt: float = 0.0

    @property
    def grid(self):
        return GridSpec.from_shape(self.S.shape)


def face_mobility(lam, lam_inflow=None):
    """Arithmetic face averages on vertical faces; the inflow ghost is lam_inflow."""
    nx, nz = lam.shape
    out = np.empty((nx + 1, nz))
    out[1:-1] = 0.5 * (lam[:-1] + lam[1:])
    out[0] = lam[0] if lam_inflow is None else 0.5 * (lam_inflow + lam[0])
    out[-1] = lam[-1]
    return out


def velocity_from_mobility(lam_faces, u_hat_inflow):
    return u_hat_inflow * lam_faces / vertical_average(lam_faces)[:, None]


def stream_function(lam_faces, u_hat_inflow):
    """psi on face corners, shape (nx + 1, nz + 1); psi = 0 at z = 0, u_hat at z = 1."""
    nx1, nz = lam_faces.shape
    psi = np.zeros((nx1, nz + 1))
    # per-column scaling keeps uniform columns exact (weights of 1.0), so psi and hence Q
    # carry no rounding noise when the mobility does not vary with z
    weights = lam_faces / np.max(lam_faces, axis=1, keepdims=True)
    np.cumsum(weights, axis=1, out=psi[:, 1:])
    psi[:, 1:] = u_hat_inflow * (psi[:, 1:] / psi[:, -1:])
    return psi


def velocity_from_stream_function(psi):
    nz = psi.shape[1] - 1
    nx = psi.shape[0] - 1
    return FaceField(np.diff(psi, axis=1) * nz, -np.diff(psi, axis=0) * nx)


def bve_velocity_U(S, u_hat_inflow, M, inflow_saturation=None):
    lam = total_mobility(S, M)
    lam_in = None if inflow_saturation is None else total_mobility(inflow_saturation, M)
    return velocity_from_mobility(face_mobility(lam, lam_in), u_hat_inflow)


def bve_velocity_Q(U, grid=None):
    U = np.asarray(U, dtype=float)
    grid = grid or GridSpec(U.shape[0] - 1, U.shape[1])
    if U.shape != (grid.nx + 1, grid.nz):
        raise ContractViolation(f"U shape {U.shape} does not match grid {grid.shape}")
    q = np.zeros((grid.nx, grid.nz + 1))
    np.cumsum(-(grid.dz / grid.dx) * np.diff(U, axis=0), axis=1, out=q[:, 1:])
    top = float(np.max(np.abs(q[:, -1])))
    if top > TOP_RESIDUAL_TOL:
        raise ContractViolation(
            f"top-wall flux {top:.3e} != 0: U columns do not share one vertical average")
    q[:, -1] = 0.0
    return q


def bve_velocity(S, params, bc=None):
    bc = bc or BoundaryData()
    grid = GridSpec.from_shape(S.shape)
    M = params.viscosity_ratio_M
    lam_faces = face_mobility(total_mobility(S, M),
                              total_mobility(bc.inflow_saturation(grid.z_centers), M))
    return velocity_from_stream_function(stream_function(lam_faces, params.u_hat_inflow))


def bve_pressure_gradient(S, params, bc=None):
    """dp/dx = -u_hat / int_0^1 lambda dz on each vertical-face column."""
    bc = bc or BoundaryData()
    grid = GridSpec.from_shape(S.shape)
    M = params.viscosity_ratio_M
    lam_faces = face_mobility(total_mobility(S, M),
                              total_mobility(bc.inflow_saturation(grid.z_centers), M))
    return -params.u_hat_inflow / vertical_average(lam_faces)


def bve_step(state, dt, params, bc=None, cfg=None):
    bc = bc or BoundaryData()
    cfg = cfg or TimeStepConfig()
    grid = state.grid
    check_dt(dt, state.V, grid, params, cfg)
    s_in = bc.inflow_saturation(grid.z_centers)
    dS, flux = imex_increment(state.S, state.V, dt, params, s_in, cfg)
    S = state.S + dS
    return BveState(state.time + dt, state.step + 1, S, bve_velocity(S, params, bc),
                    increment=dS, flux=flux, dt=dt)


def run_bve(params, bc=None, grid=None, cfg=None, snapshot_times=None, initial=None):
    bc = bc or BoundaryData()
    grid = grid or GridSpec(250, 50)
    cfg = cfg or TimeStepConfig()
    traj = Trajectory("bve")
    if initial is None:
        X, Z = grid.mesh()
        S0 = np.asarray(initial_saturation(X, Z, bc), dtype=float)
    else:
        S0 = np.array(initial, dtype=float)
    state = BveState(0.0, 0, S0, bve_velocity(S0, params, bc))
    s_in = bc.inflow_saturation(grid.z_centers)
    s_max = float(np.max(s_in)) if s_in.size else 0.0
    reference = diag.energy_reference(state.S, state.V, params, s_in)
    since_snapshot = []

    def stable_dt(s):
        return min(cfg.dt_max, cfl_limit(s.V, grid, params.viscosity_ratio_M, cfg.cfl_number))

    def advance(s, dt):
        return bve_step(s, dt, params, bc, cfg)

    def on_step(old, new, dt):
        rec = StepRecord(
            step=new.step, time=new.time, dt=dt,
            mass_residual=diag.mass_audit(old.S, new.S, new.flux, dt, params),
            div_residual=diag.divergence_residual(new.V, grid),
            dtS_energy=diag.dtS_energy(new.increment, dt, params),
            overshoot=diag.overshoot(new.S, s_max),
        )
        traj.records.append(rec)
        since_snapshot.append(rec)

    def on_snapshot(s):
        dpdx = bve_pressure_gradient(s.S, params, bc)
        # face-column gradient averaged to cell columns; p is z-independent
        gx = l2_norm(np.broadcast_to(0.5 * (dpdx[1:] + dpdx[:-1])[:, None], grid.shape))
        g2 = params.gamma**2
        u_norm, q_norm = diag.velocity_norms(s.V)
        E, bound = diag.energy_estimate(s.S, params, reference)
        traj.reports.append(diag.EstimateReport(
            time=s.time, energy_E=E, energy_bound=bound, grad_p_x=gx, grad_p_z=0.0,
            anisotropy=g2 * gx**2, u_norm=u_norm, q_norm=q_norm,
            dtS_energy=diag.dtS_energy(s.increment, s.dt, params),
            mass_residual=max((r.mass_residual for r in since_snapshot), default=0.0),
            div_residual=diag.divergence_residual(s.V, grid),
            overshoot=diag.overshoot(s.S, s_max)))
        since_snapshot.clear()

    traj.snapshots = march(state, params.end_time_T, snapshot_times, stable_dt, advance,
                           on_step, on_snapshot)
    return traj
