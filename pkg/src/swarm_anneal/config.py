"""Run configuration: a TOML file plus command-line overrides.

Schema (all keys optional except where the defaults do not fit)::

    method = "csg"                 # csg | csa | uncontrolled_swarm | langevin
    potential = "double_well"      # double_well | six_hump_camel
    m = 2.0
    kappa = 1
    n_particles = 100
    n_runs = 20
    dt = 0.002
    k = 20
    T = 1.0
    noise_factor = 2.0
    seed = 0
    record_every = 10
    out = "runs/example"
    c_tol = 1e-8
    c_bracket_expansions = 60
    ot_tolerance = 1e-9
    control = true

    [schedule]
    kind = "quadratic"; beta0 = 0.25; rate = 25.0; exponent = 2

    [init]
    kind = "swarm"                 # swarm | langevin | mixture | uniform | file
    burn_in_steps = 10000
    burn_in_dt = 0.002
    reference_size = 0             # >0: one shared sample, each run draws n_particles of it
    reference_seed = 12345
    centers = [[2.0, -1.0], [-2.0, 1.0]]   # mixture only
    cov_scale = 0.005                      # mixture only
    path = "sample.csv"                    # file only
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .dynamics import METHODS, IntegratorSpec
from .potentials import POTENTIALS
from .schedule import CoolingSchedule

__all__ = ["ConfigError", "InitSpec", "RunConfig", "load_config", "apply_overrides"]

INIT_KINDS = ("swarm", "langevin", "mixture", "uniform", "file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitSpec:
    kind: str = "swarm"
    burn_in_steps: int = 10_000
    burn_in_dt: float = 0.002
    reference_size: int = 0
    reference_seed: int = 12345
    centers: tuple = ((2.0, -1.0), (-2.0, 1.0))
    cov_scale: float = 0.005
    path: str | None = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["centers"] = [list(c) for c in self.centers]
        if d["path"] is None:
            del d["path"]
        return d


@dataclass(frozen=True)
class RunConfig:
    method: str = "csg"
    potential: str = "double_well"
    schedule: CoolingSchedule = field(default_factory=lambda: _quiet_schedule("quadratic", 0.25, 25.0, 2))
    m: float = 2.0
    kappa: int = 1
    n_particles: int = 100
    n_runs: int = 20
    dt: float = 0.002
    k: int = 20
    T: float = 1.0
    noise_factor: float = 2.0
    seed: int = 0
    init: InitSpec = field(default_factory=InitSpec)
    out: str = "runs/default"
    record_every: int = 10
    c_tol: float = 1e-8
    c_bracket_expansions: int = 60
    ot_tolerance: float = 1e-9
    control: bool = True

    def __post_init__(self) -> None:
        problems = []
        if self.method not in METHODS:
            problems.append(f"method must be one of {METHODS}")
        if self.potential not in POTENTIALS:
            problems.append(f"potential must be one of {sorted(POTENTIALS)}")
        if self.init.kind not in INIT_KINDS:
            problems.append(f"init.kind must be one of {INIT_KINDS}")
        if self.init.kind == "file" and not self.init.path:
            problems.append("init.kind = 'file' needs init.path")
        for name in ("n_particles", "n_runs", "k", "record_every"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                problems.append(f"{name} must be a positive integer")
        for name in ("dt", "c_tol", "ot_tolerance", "noise_factor"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be positive")
        if self.T < 0:
            problems.append("T must be nonnegative")
        if not self.m > 1:
            problems.append("m must exceed 1")
        if self.kappa not in (1, 2):
            problems.append("kappa must be 1 or 2")
        if self.init.reference_size and self.init.reference_size < self.n_particles:
            problems.append("init.reference_size must be at least n_particles")
        if problems:
            raise ConfigError("; ".join(problems))
        try:
            self.integrator()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def integrator(self) -> IntegratorSpec:
        return IntegratorSpec(dt=self.dt, k=self.k, T=self.T, noise_factor=self.noise_factor, method=self.method)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["schedule"] = self.schedule.to_dict()
        d["init"] = self.init.to_dict()
        return d

    def to_toml(self) -> str:
        return _dump_toml(self.to_dict())


def _quiet_schedule(kind, beta0, rate, exponent) -> CoolingSchedule:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return CoolingSchedule(kind, beta0, rate, exponent)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def _dump_toml(d: dict) -> str:
    lines = [f"{k} = {_toml_value(v)}" for k, v in d.items() if not isinstance(v, dict)]
    for k, v in d.items():
        if isinstance(v, dict):
            lines.append(f"\n[{k}]")
            lines.extend(f"{kk} = {_toml_value(vv)}" for kk, vv in v.items())
    return "\n".join(lines) + "\n"


_TOP_KEYS = {f.name for f in dataclasses.fields(RunConfig)}
_INIT_KEYS = {f.name for f in dataclasses.fields(InitSpec)}


def from_dict(raw: dict) -> RunConfig:
    raw = dict(raw)
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key == "schedule":
            try:
                kwargs[key] = CoolingSchedule.from_dict(value)
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"bad schedule: {exc}") from None
        elif key == "init":
            bad = set(value) - _INIT_KEYS
            if bad:
                raise ConfigError(f"unknown init keys: {sorted(bad)}")
            init = dict(value)
            if "centers" in init:
                init["centers"] = tuple(tuple(float(c) for c in row) for row in init["centers"])
            kwargs[key] = InitSpec(**init)
        else:
            kwargs[key] = value
    for name in ("n_particles", "n_runs", "k", "record_every", "seed", "kappa", "c_bracket_expansions"):
        if name in kwargs and isinstance(kwargs[name], float) and kwargs[name].is_integer():
            kwargs[name] = int(kwargs[name])
    for name in ("m", "dt", "T", "noise_factor", "c_tol", "ot_tolerance"):
        if name in kwargs:
            kwargs[name] = float(kwargs[name])
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return from_dict(raw)


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Return ``cfg`` with top-level keys (and ``init.*`` / ``schedule.*``) replaced."""
    raw = cfg.to_dict()
    for key, value in overrides.items():
        if value is None:
            continue
        if "." in key:
            section, sub = key.split(".", 1)
            raw[section][sub] = value
        else:
            raw[key] = value
    return from_dict(raw)
