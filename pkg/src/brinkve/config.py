"""Experiment configuration: ``key = value`` text with ``[section]`` headers.

Example::

    [grid]
    nx = 250
    nz = 50

    [model]
    model = both            # btp | bve | both
    gamma_list = 1, 1/5, 1/25
    end_time = 0.1
    snapshot_times = 0, 0.05, 0.1

    [physical]              # or [dimensionless], never both
    length_L = 5
    effective_viscosity_mue = 1e-2
    viscosity_ratio_M = 2

    [time]
    cfl_number = 0.45

    [output]
    directory = out

Keys before the first header belong to ``[general]``; every non-block key may
live in any section.  Missing keys take the defaults of the displacement
example (M = 2, mu_e = 1e-2, L = 5, u_hat = 1, T = 0.3).
"""
import configparser
from dataclasses import dataclass, field, fields
from fractions import Fraction

from .core import DimensionlessParams, PhysicalSetup, nondimensionalize
from .errors import ParameterError, ValidationError
from .grid import GridSpec
from .transport import TimeStepConfig

MODELS = ("btp", "bve", "both")


@dataclass(frozen=True)
class PhysicalBlock:
    length_L: float = 5.0
    width_H: float | None = None
    viscosity_ratio_M: float = 2.0
    effective_viscosity_mue: float = 1e-2
    inflow_speed_q: float = 1.0
    viscosity_defending_mud: float = 1.0
    mean_perm_kx: float = 1.0
    mean_perm_kz: float = 1.0
    u_hat_inflow: float = 1.0

    def setup(self, gamma=None):
        H = self.width_H if gamma is None else gamma * self.length_L
        if H is None:
            raise ValidationError("width_H is required when no gamma is given", key="width_H")
        return PhysicalSetup(
            length_L=self.length_L, width_H=H,
            viscosity_ratio_M=self.viscosity_ratio_M,
            effective_viscosity_mue=self.effective_viscosity_mue,
            inflow_speed_q=self.inflow_speed_q,
            viscosity_defending_mud=self.viscosity_defending_mud,
            mean_perm_kx=self.mean_perm_kx, mean_perm_kz=self.mean_perm_kz)

    def params(self, gamma, end_time):
        return nondimensionalize(self.setup(gamma), end_time=end_time,
                                 u_hat_inflow=self.u_hat_inflow)


@dataclass(frozen=True)
class DimensionlessBlock:
    beta1: float = 4e-4
    viscosity_ratio_M: float = 2.0
    u_hat_inflow: float = 1.0

    def params(self, gamma, end_time):
        # H = gamma L with L fixed: beta2 = beta1 / gamma^2
        return DimensionlessParams(gamma=gamma, beta1=self.beta1, beta2=self.beta1 / gamma**2,
                                   viscosity_ratio_M=self.viscosity_ratio_M,
                                   u_hat_inflow=self.u_hat_inflow, end_time_T=end_time)


@dataclass(frozen=True)
class ExperimentConfig:
    nx: int = 250
    nz: int = 50
    model: str = "both"
    gamma_list: tuple = (1.0, 0.2, 0.04)
    end_time: float = 0.3
    snapshot_times: tuple | None = None
    physical: PhysicalBlock | None = field(default_factory=PhysicalBlock)
    dimensionless: DimensionlessBlock | None = None
    time: TimeStepConfig = field(default_factory=TimeStepConfig)
    output_dir: str = "output"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        GridSpec(self.nx, self.nz)
        if self.model not in MODELS:
            raise ValidationError(f"model must be one of {MODELS}, got {self.model!r}", key="model")
        gl = self.gamma_list
        if not gl:
            raise ValidationError("gamma_list must not be empty", key="gamma_list")
        if any(not (0.0 < g <= 1.0) for g in gl):
            raise ValidationError("gamma_list entries must lie in (0, 1]", key="gamma_list")
        if any(b >= a for a, b in zip(gl, gl[1:])):
            raise ValidationError("gamma_list must be strictly decreasing", key="gamma_list")
        if not (self.end_time >= 0.0):
            raise ValidationError("end_time must be >= 0", key="end_time")
        if self.snapshot_times is not None and any(
                t < 0.0 or t > self.end_time for t in self.snapshot_times):
            raise ValidationError(f"snapshot_times must lie in [0, {self.end_time}]",
                                  key="snapshot_times")
        if (self.physical is None) == (self.dimensionless is None):
            raise ValidationError("exactly one of [physical] / [dimensionless] is required",
                                  key="physical")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1", key="workers")

    @property
    def grid(self):
        return GridSpec(self.nx, self.nz)

    @property
    def snapshots(self):
        if self.snapshot_times is None:
            return (0.0, 0.5 * self.end_time, self.end_time)
        return self.snapshot_times

    def params(self, gamma):
        block = self.physical if self.physical is not None else self.dimensionless
        return block.params(gamma, self.end_time)

    def single_run_gamma(self, override=None):
        if override is not None:
            return override
        if self.physical is not None and self.physical.width_H is not None:
            return self.physical.width_H / self.physical.length_L
        return self.gamma_list[-1]


def _number(text, key):
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"{key}: cannot parse number {text!r}", key=key) from None


def _integer(text, key):
    value = _number(text, key)
    if value != int(value):
        raise ValidationError(f"{key}: expected an integer, got {text!r}", key=key)
    return int(value)


def _number_list(text, key):
    items = [t for t in text.replace(";", ",").split(",") if t.strip()]
    return tuple(_number(t, key) for t in items)


def _text(text, key):
    return text.strip().strip("\"'")


_GENERAL_KEYS = {
    "nx": _integer, "nz": _integer, "model": _text, "gamma_list": _number_list,
    "end_time": _number, "snapshot_times": _number_list, "directory": _text,
    "output_dir": _text, "seed": _integer, "workers": _integer,
    "cfl_number": _number, "dt_max": _number, "cg_tol": _number, "cg_max_iter": _integer,
    "regularization_solver": _text,
}
_TIME_KEYS = ("cfl_number", "dt_max", "cg_tol", "cg_max_iter", "regularization_solver")
_BLOCKS = {"physical": PhysicalBlock, "dimensionless": DimensionlessBlock}


def parse_config(text):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       comment_prefixes=("#", ";"), strict=True,
                                       default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string("[general]\n" + text)
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse config: {exc}") from None

    general, time_kw, blocks = {}, {}, {}
    for section in parser.sections():
        items = dict(parser.items(section))
        if section in _BLOCKS:
            cls = _BLOCKS[section]
            names = {f.name for f in fields(cls)}
            kw = {}
            for key, value in items.items():
                if key not in names:
                    raise ValidationError(f"unknown key {key!r} in [{section}]", key=key)
                kw[key] = _number(value, key)
            if section == "dimensionless" and "beta1" not in kw:
                raise ValidationError("[dimensionless] requires beta1", key="beta1")
            try:
                blocks[section] = cls(**kw)
            except (ParameterError, ValidationError) as exc:
                raise ValidationError(str(exc), key=getattr(exc, "key", None)) from None
            continue
        for key, value in items.items():
            if key not in _GENERAL_KEYS:
                raise ValidationError(f"unknown key {key!r}", key=key)
            if key in general or key in time_kw:
                raise ValidationError(f"duplicate key {key!r}", key=key)
            parsed = _GENERAL_KEYS[key](value, key)
            (time_kw if key in _TIME_KEYS else general)[key] = parsed

    if "directory" in general:
        general["output_dir"] = general.pop("directory")
    if "physical" in blocks and "dimensionless" in blocks:
        raise ValidationError("exactly one of [physical] / [dimensionless] is allowed",
                              key="dimensionless")
    if "dimensionless" in blocks:
        general["physical"] = None
        general["dimensionless"] = blocks["dimensionless"]
    elif "physical" in blocks:
        general["physical"] = blocks["physical"]
    try:
        general["time"] = TimeStepConfig(**time_kw)
    except ParameterError as exc:
        raise ValidationError(str(exc)) from None
    try:
        return ExperimentConfig(**general)
    except ParameterError as exc:
        raise ValidationError(str(exc)) from None


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
