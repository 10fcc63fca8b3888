"""Run configuration: a YAML tree mapped onto nested dataclasses.

Every section and key is optional and falls back to the defaults below;
unknown keys and ill-typed values raise :class:`ConfigError` before any
computation starts.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .phantom import PhantomSpec, Shape, SmoothBump, named_phantom
from .spectral import WINDOWS, KGrid, SolverSettings


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    side_half: float = 2.0
    exponent: int = 8


@dataclass
class PhantomConfig:
    """Either ``name`` (a built-in phantom, with ``params``) or explicit
    ``background`` / ``inclusions``."""

    name: str | None = "radial-1jump"
    params: dict = field(default_factory=dict)
    background: dict | None = None
    inclusions: list = field(default_factory=list)
    smoothing_cells: int = 0


@dataclass
class KGridConfig:
    R: float = 60.0
    n_tau: int = 128
    n_phi: int = 32
    window: str = "blackman"


@dataclass
class BoundaryConfig:
    n_b: int = 64


@dataclass
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 500
    warm_start: bool = True
    method: str = "gmres"


@dataclass
class AveragingConfig:
    weight: float = 1.0
    calibration: float | str = -0.5  # a number, or "calibrate"


@dataclass
class ReconstructionConfig:
    route: str = "both"  # fbp | lambda | both


@dataclass
class NeumannConfig:
    N: int = 3


@dataclass
class PredictConfig:
    orders: list = field(default_factory=lambda: [0, 1, 2, 3])


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["vhed", "csv", "pgm", "png"])
    render: str = "real"


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    phantom: PhantomConfig = field(default_factory=PhantomConfig)
    kgrid: KGridConfig = field(default_factory=KGridConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    averaging: AveragingConfig = field(default_factory=AveragingConfig)
    reconstruction: ReconstructionConfig = field(default_factory=ReconstructionConfig)
    neumann: NeumannConfig = field(default_factory=NeumannConfig)
    predict: PredictConfig = field(default_factory=PredictConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    workers: int = 1

    def kgrid_obj(self) -> KGrid:
        k = self.kgrid
        return KGrid(k.R, k.n_tau, k.n_phi, k.window)

    def solver_settings(self) -> SolverSettings:
        s = self.solver
        return SolverSettings(s.tol, s.max_iter, s.warm_start, s.method)

    def phantom_spec(self) -> PhantomSpec:
        p = self.phantom
        if p.name is not None:
            return named_phantom(p.name, **dict(p.params))
        bg = None if p.background is None else SmoothBump(**p.background)
        shapes = tuple(_shape(s) for s in p.inclusions)
        return PhantomSpec(bg, shapes, p.smoothing_cells)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _shape(d: dict) -> Shape:
    d = dict(d)
    if "center" in d:
        c = d["center"]
        d["center"] = complex(*c) if isinstance(c, (list, tuple)) else complex(c)
    if "semi_axes" in d:
        d["semi_axes"] = tuple(d["semi_axes"])
    return Shape(**d)


_TYPES = {float: (int, float), int: (int,), bool: (bool,), str: (str,), list: (list,),
          dict: (dict,)}


def _check_type(path: str, value, annotation: str):
    allowed = []
    for part in annotation.replace(" ", "").split("|"):
        if part == "None":
            if value is None:
                return
            continue
        base = {"float": float, "int": int, "bool": bool, "str": str, "list": list,
                "dict": dict}.get(part)
        if base is not None:
            allowed.extend(_TYPES[base])
    if isinstance(value, bool) and bool not in allowed:
        raise ConfigError(f"{path}: expected {annotation}, got {value!r}")
    if not isinstance(value, tuple(allowed)):
        raise ConfigError(f"{path}: expected {annotation}, got {value!r}")


def _build(cls, data, path: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown keys {unknown}")
    kwargs = {}
    for name, value in data.items():
        f = fields[name]
        sub = f"{path}.{name}" if path else name
        factory = f.default_factory
        if factory is not dataclasses.MISSING and dataclasses.is_dataclass(factory):
            kwargs[name] = _build(factory, value, sub)
        else:
            _check_type(sub, value, str(f.type))
            kwargs[name] = float(value) if str(f.type) == "float" else value
    return cls(**kwargs)


def validate(cfg: RunConfig) -> RunConfig:
    """Range checks and a dry construction of every derived object."""
    try:
        if cfg.workers < 1:
            raise ConfigError("workers must be >= 1")
        if cfg.grid.exponent < 4:
            raise ConfigError("grid.exponent must be >= 4")
        if cfg.kgrid.window not in WINDOWS:
            raise ConfigError(f"kgrid.window must be one of {WINDOWS}")
        if cfg.boundary.n_b < 4:
            raise ConfigError("boundary.n_b must be >= 4")
        if cfg.solver.method not in ("gmres", "fixed-point"):
            raise ConfigError("solver.method must be gmres or fixed-point")
        if cfg.solver.tol <= 0 or cfg.solver.max_iter < 1:
            raise ConfigError("solver.tol must be > 0 and solver.max_iter >= 1")
        cal = cfg.averaging.calibration
        if isinstance(cal, str) and cal != "calibrate":
            raise ConfigError("averaging.calibration must be a number or 'calibrate'")
        if cfg.reconstruction.route not in ("fbp", "lambda", "both"):
            raise ConfigError("reconstruction.route must be fbp, lambda or both")
        if cfg.neumann.N < 1:
            raise ConfigError("neumann.N must be >= 1")
        if any((not isinstance(m, int)) or m < 0 or m > 5 for m in cfg.predict.orders):
            raise ConfigError("predict.orders must be integers in [0, 5]")
        if cfg.outputs.render not in ("real", "abs", "imag"):
            raise ConfigError("outputs.render must be real, abs or imag")
        bad = set(cfg.outputs.formats) - {"vhed", "csv", "pgm", "png"}
        if bad:
            raise ConfigError(f"outputs.formats: unknown {sorted(bad)}")
        cfg.kgrid_obj()
        cfg.phantom_spec()
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def from_dict(data: dict | None) -> RunConfig:
    return validate(_build(RunConfig, data or {}, ""))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(data)


def dump_config(cfg: RunConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    return path
