"""Experiment configuration: schema, YAML parsing, validation and echo.

A config file holds up to seven blocks (``material``, ``fatigue``,
``hydrogen``, ``geometry``, ``load``, ``solver``, ``output``); every key is
optional and unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .driver import LoadProgram, SolverOptions
from .experiment import COEFFICIENT_SETS
from .mesh import CTGeometry, MeshConfigurationError
from .params import FatigueParams, HydrogenParams, MaterialParams
from .transport import TransportOptions


class ConfigError(ValueError):
    """Schema violation (unknown key or wrong type)."""


class ConfigValidationError(ValueError):
    """Values of the right type that are physically inconsistent."""


@dataclass(frozen=True)
class LoadBlock:
    """Cyclic loading and stopping rules.

    ``delta_K`` [MPa sqrt(m)] switches to stress-intensity control: the
    load range is re-set every cycle from the current crack length.
    """

    delta_P: Optional[float] = 20_000.0
    P_max: Optional[float] = None
    delta_K: Optional[float] = None
    R: float = 0.1
    f: float = 1.0
    waveform: str = "sinusoidal"
    increments_per_cycle: int = 8
    cycle_jump: int = 1
    max_cycles: int = 1_000_000
    max_crack_extension: float = math.inf
    max_a_over_W: float = 0.8
    soak_duration: float = 86_400.0
    precharged: bool = False
    p_H2: float = 0.0


@dataclass(frozen=True)
class SolverBlock:
    tol_stagger: float = math.inf
    max_stagger: int = 10
    damaged_sigma_h: bool = True
    alpha_degraded: bool = True
    distributed_pin: bool = False
    phi_exposure: float = 0.9
    penalty_factor: float = 1e6
    penalty_min_dt_ratio: float = 1e3
    stabilization: bool = False
    lumped_mass: bool = True
    coefficient_set: str = "astm"


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "results"
    run_id: str = "run"
    snapshot_every: int = 0
    da_log: float = 0.1
    dump_on_abort: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    material: MaterialParams = field(default_factory=MaterialParams)
    fatigue: FatigueParams = field(default_factory=FatigueParams)
    hydrogen: HydrogenParams = field(default_factory=HydrogenParams)
    geometry: CTGeometry = field(default_factory=CTGeometry)
    load: LoadBlock = field(default_factory=LoadBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def material_params(self) -> MaterialParams:
        return self.material

    def load_program(self) -> LoadProgram:
        L = self.load
        delta_P = L.delta_P if L.P_max is None else None
        if L.delta_K is not None:
            delta_P, P_max = None, None
        else:
            P_max = L.P_max
        return LoadProgram(P_max=P_max, delta_P=delta_P, R=L.R, f=L.f, waveform=L.waveform,
                           increments_per_cycle=L.increments_per_cycle,
                           max_cycles=L.max_cycles, soak_duration=L.soak_duration,
                           precharged=L.precharged, p_H2=L.p_H2, cycle_jump=L.cycle_jump)

    def solver_options(self) -> SolverOptions:
        s = self.solver
        dump = str(Path(self.output.directory) / "dumps") if self.output.dump_on_abort else None
        return SolverOptions(
            tol_stagger=s.tol_stagger, max_stagger=s.max_stagger,
            damaged_sigma_h=s.damaged_sigma_h, alpha_degraded=s.alpha_degraded,
            distributed_pin=s.distributed_pin, dump_dir=dump,
            transport=TransportOptions(phi_exposure=s.phi_exposure,
                                       penalty_factor=s.penalty_factor,
                                       penalty_min_dt_ratio=s.penalty_min_dt_ratio,
                                       stabilization=s.stabilization,
                                       lumped_mass=s.lumped_mass))

    def resolved(self) -> "ExperimentConfig":
        """Fill every derived default and validate cross-block consistency."""
        try:
            fat = self.fatigue.resolved(self.material)
            geo = self.geometry.resolved(self.material.ell)
            L = self.load
            if L.delta_K is not None and not L.delta_K > 0:
                raise ValueError("delta_K must be positive")
            if L.delta_K is None and L.delta_P is None and L.P_max is None:
                raise ValueError("one of delta_P, P_max or delta_K is required")
            if not 0 < L.max_a_over_W < 1:
                raise ValueError("max_a_over_W must lie in (0, 1)")
            if not L.max_crack_extension > 0:
                raise ValueError("max_crack_extension must be positive")
            self.load_program()
            if self.solver.coefficient_set not in COEFFICIENT_SETS:
                raise ValueError(f"coefficient_set must be one of {sorted(COEFFICIENT_SETS)}")
            if not 0 < self.solver.phi_exposure <= 1:
                raise ValueError("phi_exposure must lie in (0, 1]")
            if not self.output.da_log > 0:
                raise ValueError("da_log must be positive")
            if self.output.snapshot_every < 0:
                raise ValueError("snapshot_every must be non-negative")
        except (ValueError, MeshConfigurationError) as exc:
            raise ConfigValidationError(str(exc)) from exc
        return dataclasses.replace(self, fatigue=fat, geometry=geo)

    def to_dict(self) -> dict:
        return {f.name: dataclasses.asdict(getattr(self, f.name))
                for f in dataclasses.fields(self)}


_BLOCKS = {f.name: f.default_factory for f in dataclasses.fields(ExperimentConfig)}  # type: ignore[misc]


def _coerce(path: str, value, tp):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(path, value, args[0])
    if tp is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{path}: expected bool, got {type(value).__name__}")
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigError(f"{path}: expected int, got {value!r}")
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected float, got {type(value).__name__}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected str, got {type(value).__name__}")
        return value
    raise ConfigError(f"{path}: unsupported schema type {tp}")


def _block(name: str, data) -> object:
    cls = type(_BLOCKS[name]())
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for k, v in data.items():
        if k not in names:
            raise ConfigError(f"unknown key {name}.{k!s}")
        kwargs[k] = _coerce(f"{name}.{k}", v, hints[k])
    try:
        return cls(**kwargs)
    except (ValueError, MeshConfigurationError) as exc:
        raise ConfigValidationError(f"{name}: {exc}") from exc


def config_from_dict(data: Optional[dict]) -> ExperimentConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping of blocks")
    for k in data:
        if k not in _BLOCKS:
            raise ConfigError(f"unknown key {k!s}")
    blocks = {k: _block(k, data.get(k)) for k in _BLOCKS}
    return ExperimentConfig(**blocks).resolved()


def parse_config(path) -> ExperimentConfig:
    """Read a YAML config file; an empty file gives all defaults."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return config_from_dict(data)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def echo_config(config: ExperimentConfig, directory) -> Path:
    """Write the resolved config next to the outputs for provenance."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{config.output.run_id}.resolved.yaml"
    path.write_text(dump_config(config))
    return path


def with_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Copy with dotted-path overrides, e.g. ``{"load.R": 0.4}``."""
    d = config.to_dict()
    for key, value in overrides.items():
        block, name = key.split(".", 1)
        if block not in d or name not in d[block]:
            raise ConfigError(f"unknown key {key}")
        d[block][name] = value
    return config_from_dict(d)
