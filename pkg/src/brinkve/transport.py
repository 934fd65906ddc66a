"""IMEX saturation update shared by the full and the reduced model.

One step solves

    (I - beta1 D_xx - beta2 D_zz) dS = -dt * div(f(S_upwind) V)

for the increment dS, with dS = 0 at the inflow wall and homogeneous Neumann
conditions on the other three sides, then sets S <- S + dS.  The regularising
operator is constant in time, so it is factorised once per (grid, beta) pair.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .core import frac_flow_lipschitz
from .errors import ParameterError, StepRejected
from .grid import GridSpec, LinearOperatorSpec, cg_solve, divergence, upwind_face_flux

_TIME_EPS = 1e-12


@dataclass(frozen=True)
class TimeStepConfig:
    cfl_number: float = 0.45
    dt_max: float = 1e-2
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None  # None -> 10 * nx * nz
    regularization_solver: str = "direct"  # "direct" (cached LU) or "cg"

    def __post_init__(self):
        if not (0.0 < self.cfl_number < 1.0):
            raise ParameterError(f"cfl_number must lie in (0, 1), got {self.cfl_number}")
        if not (self.dt_max > 0.0):
            raise ParameterError("dt_max must be > 0")
        if not (0.0 < self.cg_tol < 1.0):
            raise ParameterError("cg_tol must lie in (0, 1)")
        if self.regularization_solver not in ("direct", "cg"):
            raise ParameterError("regularization_solver must be 'direct' or 'cg'")

    def max_iter(self, grid):
        return self.cg_max_iter or 10 * grid.nx * grid.nz


@dataclass
class StepRecord:
    step: int
    time: float
    dt: float
    mass_residual: float
    div_residual: float
    dtS_energy: float
    overshoot: float


@dataclass
class Trajectory:
    model: str
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    pressure_solves: int = 0

    @property
    def final(self):
        return self.snapshots[-1]

    @property
    def mass_residual_max(self):
        return max((r.mass_residual for r in self.records), default=0.0)

    @property
    def div_residual_max(self):
        return max((r.div_residual for r in self.records), default=0.0)


def regularization_operator(grid, params):
    cx = np.full((grid.nx + 1, grid.nz), float(params.beta1))
    cz = np.full((grid.nx, grid.nz + 1), float(params.beta2))
    return LinearOperatorSpec(cx, cz, shift=1.0, bc={"left": 0.0})


@lru_cache(maxsize=16)
def _factorized(nx, nz, beta1, beta2):
    from scipy.sparse.linalg import splu

    op = regularization_operator(GridSpec(nx, nz), _Betas(beta1, beta2))
    return splu(op.to_sparse())


@dataclass(frozen=True)
class _Betas:
    beta1: float
    beta2: float


def solve_regularized(rhs, params, cfg):
    grid = GridSpec.from_shape(rhs.shape)
    if params.beta1 == 0.0 and params.beta2 == 0.0:
        return np.array(rhs, dtype=float)
    if cfg.regularization_solver == "cg":
        return cg_solve(regularization_operator(grid, params), rhs,
                        tol=cfg.cg_tol, max_iter=cfg.max_iter(grid))
    lu = _factorized(grid.nx, grid.nz, float(params.beta1), float(params.beta2))
    return lu.solve(np.ascontiguousarray(rhs, dtype=float).ravel()).reshape(grid.shape)


def regularized_mass(S, params):
    """Integral of (I - beta1 D_xx - beta2 D_zz) S over the unit square."""
    grid = GridSpec.from_shape(S.shape)
    op = regularization_operator(grid, params)
    return float(np.add.reduce(op.apply(S).ravel())) * grid.dx * grid.dz


def cfl_limit(V, grid, M, cfl):
    umax = float(np.max(np.abs(V.u)))
    qmax = float(np.max(np.abs(V.q)))
    limit = min(grid.dx / umax if umax > 0 else np.inf, grid.dz / qmax if qmax > 0 else np.inf)
    return cfl * limit / frac_flow_lipschitz(float(M))


def check_dt(dt, V, grid, params, cfg):
    limit = cfl_limit(V, grid, params.viscosity_ratio_M, cfg.cfl_number)
    if not dt > 0.0:
        raise StepRejected(f"dt must be > 0, got {dt}", suggested_dt=min(limit, cfg.dt_max))
    if dt > limit * (1.0 + 1e-9):
        raise StepRejected(f"dt={dt:.4e} exceeds the CFL limit {limit:.4e}", suggested_dt=limit)


def imex_increment(S, V, dt, params, inflow_saturation, cfg):
    """Return (dS, face_flux) for one explicit-flux / implicit-regularisation step."""
    grid = GridSpec.from_shape(S.shape)
    flux = upwind_face_flux(S, V, params.viscosity_ratio_M, inflow_saturation)
    rhs = -dt * divergence(flux, grid)
    return solve_regularized(rhs, params, cfg), flux


def snapshot_schedule(end_time, snapshot_times=None):
    if snapshot_times is None:
        snapshot_times = (0.0, 0.5 * end_time, end_time)
    times = sorted({float(t) for t in snapshot_times})
    if times and (times[0] < 0.0 or times[-1] > end_time * (1 + _TIME_EPS)):
        raise ParameterError(f"snapshot times must lie in [0, {end_time}]")
    if not times or times[-1] < end_time:
        times.append(float(end_time))
    return times


def march(state, end_time, snapshot_times, stable_dt, advance, on_step=None, on_snapshot=None):
    """Generic time loop; ``advance(state, dt)`` returns the next state.

    Steps are truncated to land exactly on every snapshot time.
    """
    snapshots = []
    for target in snapshot_schedule(end_time, snapshot_times):
        while target - state.time > _TIME_EPS * max(1.0, end_time):
            dt = min(stable_dt(state), target - state.time)
            new = advance(state, dt)
            if target - new.time <= _TIME_EPS * max(1.0, end_time):
                new = replace(new, time=target)
            if on_step is not None:
                on_step(state, new, dt)
            state = new
        if on_snapshot is not None:
            on_snapshot(state)
        snapshots.append(state)
    return snapshots
