"""Monitors for the a priori estimates and the discrete balance laws.

The estimate bounds are reported alongside the measured functionals, never
asserted here; callers compare trends.
"""
import logging
from dataclasses import asdict, dataclass

import numpy as np

from .core import frac_flow
from .errors import ContractViolation
from .grid import (GridSpec, divergence, face_to_cell, l2_grad_norms, l2_norm,
                   net_boundary_flux)
from .transport import regularized_mass

log = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-8


@dataclass
class EstimateReport:
    time: float
    energy_E: float
    energy_bound: float
    grad_p_x: float
    grad_p_z: float
    anisotropy: float
    u_norm: float
    q_norm: float
    dtS_energy: float
    mass_residual: float
    div_residual: float
    overshoot: float

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EnergyReference:
    initial_energy: float
    c_inflow: float

    @property
    def bound(self):
        return self.initial_energy + self.c_inflow


def energy(S, params):
    """||S||^2 + beta1 ||dS/dx||^2 + beta2 ||dS/dz||^2."""
    gx, gz = l2_grad_norms(S)
    return l2_norm(S) ** 2 + params.beta1 * gx**2 + params.beta2 * gz**2


def energy_reference(S0, V0, params, inflow_saturation):
    """E(0) and C_inflow = 2 sup(f) ||U_inflow||_inf ||S_inflow||_inf.

    ``V0`` supplies the discrete inflow-face velocities at t = 0.
    """
    f_sup = float(frac_flow(1.0, params.viscosity_ratio_M))
    u_in = float(np.max(np.abs(V0.u[0]))) if V0 is not None else 0.0
    s_in = float(np.max(np.abs(inflow_saturation))) if np.size(inflow_saturation) else 0.0
    return EnergyReference(energy(S0, params), 2.0 * f_sup * u_in * s_in)


def energy_estimate(S, params, reference):
    """(E(t), E(0) + C_inflow)."""
    return energy(S, params), reference.bound


def pressure_anisotropy(p, params):
    """(||dp/dx||, ||dp/dz||, (1 - gamma^2)||dp/dz||^2 + gamma^2 ||dp/dx||^2)."""
    gx, gz = l2_grad_norms(p)
    g2 = params.gamma**2
    return gx, gz, (1.0 - g2) * gz**2 + g2 * gx**2


def dtS_energy(increment, dt, params):
    if increment is None or dt <= 0.0:
        return 0.0
    return energy(np.asarray(increment) / dt, params)


def mass_audit(before, after, flux, dt, params):
    """Relative defect of the regularised mass balance over one step.

    |Delta(int (I - beta1 D_xx - beta2 D_zz) S) + dt * net outflow| / max(mass, 1)
    """
    grid = GridSpec.from_shape(np.shape(after))
    change = regularized_mass(after, params) - regularized_mass(before, params)
    mass = abs(float(np.add.reduce(np.ravel(after)))) * grid.dx * grid.dz
    residual = abs(change + dt * net_boundary_flux(flux, grid)) / max(mass, 1.0)
    if residual > MASS_TOLERANCE:
        log.warning("conservation violated: mass residual %.3e > %.0e", residual, MASS_TOLERANCE)
    return residual


def l2_difference(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractViolation(f"grid mismatch: {a.shape} vs {b.shape}")
    return l2_norm(a - b)


def divergence_residual(V, grid):
    """max |div V| over cells."""
    return float(np.max(np.abs(divergence(V, grid))))


def relative_divergence_residual(V, grid, lift):
    """||div V|| / ||boundary lift||, the relative residual of the pressure equation."""
    ref = np.sqrt(np.add.reduce((lift * lift).ravel()))
    d = divergence(V, grid)
    return float(np.sqrt(np.add.reduce((d * d).ravel())) / ref) if ref > 0 else float(np.max(np.abs(d)))


def overshoot(S, s_max=0.9):
    S = np.asarray(S)
    return float(max(np.max(S) - s_max, -np.min(S), 0.0)) + 0.0  # no -0.0


def velocity_norms(V):
    uc, qc = face_to_cell(V)
    return l2_norm(uc), l2_norm(qc)
