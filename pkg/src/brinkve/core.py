"""Model data, constitutive laws and the inflow/initial profiles.

Everything here is dimensionless unless stated otherwise.  The mobility pair
is the quadratic Corey law

    lambda_i = M S^2,  lambda_d = (1 - S)^2,
    lambda_tot = lambda_i + lambda_d,  f = lambda_i / lambda_tot,

so that ``f`` is the fractional flow of the displacement example and
``lambda_tot >= M / (1 + M)``.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ParameterError, ValidationError

BAND_LOW = 0.3
BAND_HIGH = 0.7
BAND_SATURATION = 0.9

PRIMITIVE_PANELS = 4096


@dataclass(frozen=True)
class PhysicalSetup:
    length_L: float
    width_H: float
    viscosity_ratio_M: float = 2.0
    effective_viscosity_mue: float = 1e-2
    inflow_speed_q: float = 1.0
    viscosity_defending_mud: float = 1.0
    mean_perm_kx: float = 1.0
    mean_perm_kz: float = 1.0

    def __post_init__(self):
        for name in ("length_L", "width_H", "viscosity_ratio_M", "effective_viscosity_mue",
                     "inflow_speed_q", "viscosity_defending_mud", "mean_perm_kx", "mean_perm_kz"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} must be finite and > 0, got {value!r}")
        if self.width_H > self.length_L:
            raise ValidationError(
                f"width_H={self.width_H} exceeds length_L={self.length_L}: not a thin domain",
                key="width_H")


@dataclass(frozen=True)
class DimensionlessParams:
    gamma: float
    beta1: float
    beta2: float
    viscosity_ratio_M: float = 2.0
    u_hat_inflow: float = 1.0
    end_time_T: float = 0.3

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ParameterError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if not (self.beta1 >= 0.0 and self.beta2 >= 0.0):
            raise ParameterError("beta1, beta2 must be >= 0")
        if self.beta1 > self.beta2 * (1.0 + 1e-12):
            raise ParameterError(f"beta1={self.beta1} > beta2={self.beta2}; needs H <= L")
        _check_ratio(self.viscosity_ratio_M)
        if not (self.u_hat_inflow > 0.0):
            raise ParameterError("u_hat_inflow must be > 0")
        if not (self.end_time_T >= 0.0):
            raise ParameterError("end_time_T must be >= 0")

    @property
    def M(self):
        return self.viscosity_ratio_M


def band_profile(z):
    """Inflow saturation: 0.9 on 3/10 < z <= 7/10, zero elsewhere."""
    z = np.asarray(z, dtype=float)
    return np.where((z > BAND_LOW) & (z <= BAND_HIGH), BAND_SATURATION, 0.0)


def constant_profile(z, value=BAND_SATURATION):
    return np.full_like(np.asarray(z, dtype=float), value)


@dataclass(frozen=True)
class BoundaryData:
    # must be picklable (module-level function or functools.partial) for parallel sweeps
    inflow_saturation_profile: object = field(default=band_profile)
    pressure_inflow: float = 1.0
    pressure_outflow: float = 0.0

    def inflow_saturation(self, z):
        s = np.asarray(self.inflow_saturation_profile(np.asarray(z, dtype=float)), dtype=float)
        if np.any(s < 0.0) or np.any(s > 1.0):
            raise ValidationError("inflow saturation profile leaves [0, 1]",
                                  key="inflow_saturation_profile")
        return s


def _check_ratio(M):
    if not np.all(np.isfinite(M)) or np.any(np.asarray(M) <= 0):
        raise ParameterError(f"viscosity ratio M must be finite and > 0, got {M!r}")


def _clamped(S):
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        raise ParameterError("saturation contains non-finite values")
    return np.clip(S, 0.0, 1.0)


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def total_mobility(S, M):
    _check_ratio(M)
    S = _clamped(S)
    return _out(M * S * S + (1.0 - S) ** 2)


def frac_flow(S, M):
    _check_ratio(M)
    S = _clamped(S)
    invading = M * S * S
    return _out(invading / (invading + (1.0 - S) ** 2))


def frac_flow_derivative(S, M):
    _check_ratio(M)
    S = _clamped(S)
    lam = M * S * S + (1.0 - S) ** 2
    dlam = 2.0 * M * S - 2.0 * (1.0 - S)
    return _out((2.0 * M * S * lam - M * S * S * dlam) / (lam * lam))


@lru_cache(maxsize=64)
def frac_flow_lipschitz(M):
    """max f' sampled on a 1e-3 grid of [0, 1]."""
    return float(np.max(frac_flow_derivative(np.linspace(0.0, 1.0, 1001), M)))


def frac_flow_primitive(S, M):
    """F(S) = integral of f from 0 to S.

    Composite Simpson on [0, S] with a fixed panel count; the truncation error
    is far below 1e-10 for the Corey pair.
    """
    _check_ratio(M)
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        raise ParameterError("saturation contains non-finite values")
    if np.any(S < 0.0) or np.any(S > 1.0):
        raise ParameterError("frac_flow_primitive needs S in [0, 1]")
    t = np.linspace(0.0, 1.0, PRIMITIVE_PANELS + 1)
    w = np.ones_like(t)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 3.0 * PRIMITIVE_PANELS
    # nodes scale with S so every evaluation uses the same rule on [0, S]
    nodes = np.multiply.outer(S, t)
    values = np.asarray(frac_flow(nodes, M))
    return _out(S * (values @ w))


def inflow_ramp(x):
    """g(x) = (1-x)^2 / (1e5 x^2 + (1-x)^2)."""
    x = np.asarray(x, dtype=float)
    return (1.0 - x) ** 2 / (1e5 * x * x + (1.0 - x) ** 2)


def initial_saturation(x, z, bc=None):
    bc = bc or BoundaryData()
    return _out(inflow_ramp(x) * bc.inflow_saturation(z))


def nondimensionalize(setup, end_time=0.3, u_hat_inflow=1.0):
    """Map a physical setup to (gamma, beta1, beta2); kappa = sigma = 1."""
    L, H = setup.length_L, setup.width_H
    mue = setup.effective_viscosity_mue
    return DimensionlessParams(
        gamma=H / L,
        beta1=mue / L**2,
        beta2=mue / H**2,
        viscosity_ratio_M=setup.viscosity_ratio_M,
        u_hat_inflow=u_hat_inflow,
        end_time_T=end_time,
    )


def params_for_gamma(gamma, length_L=5.0, mue=1e-2, M=2.0, end_time=0.3, u_hat_inflow=1.0):
    """Thin-domain family with fixed length: H = gamma * L."""
    setup = PhysicalSetup(length_L=length_L, width_H=gamma * length_L,
                          viscosity_ratio_M=M, effective_viscosity_mue=mue)
    return nondimensionalize(setup, end_time=end_time, u_hat_inflow=u_hat_inflow)
