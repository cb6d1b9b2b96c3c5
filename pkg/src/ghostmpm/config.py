"""YAML scenario files.

A scenario file is a mapping with the keys::

    scenario: colliding_elastic        # see SCENARIOS
    grid: {origin: [x, y], h: ..., nx: ..., ny: ..., dirichlet: [...]}
    materials: [{E: ..., nu: ..., rho: ..., yield_stress: ...}, ...]
    bodies: [{generator: rect | block | csv, ...}, ...]
    loads: [{select: tip_pair | nearest, force: [fx, fy], ...}]   # optional
    solver: {explicit: {...}} | {implicit: {...}} | {sweep: {...}}
    ghost: {enabled: true, gamma_M: ..., gamma_k: ...}
    output: {directory: ..., snapshot_stride: ...}

Relative paths (point clouds, output directory) resolve against the
directory holding the scenario file.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError
from .explicit import ExplicitConfig
from .implicit import ImplicitConfig
from .mpoints import Material

SCENARIOS = (
    "translating_domain",
    "translating_body",
    "stretching_body",
    "colliding_elastic",
    "colliding_plastic",
    "column",
    "beam",
    "custom",
)
SOLVER_KINDS = ("explicit", "implicit", "sweep")
GENERATORS = ("rect", "block", "csv")


@dataclass
class ScenarioConfig:
    name: str
    grid: dict
    materials: list
    bodies: list
    solver_kind: str
    solver: dict
    ghost: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    loads: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @property
    def ghost_enabled(self):
        return bool(self.ghost.get("enabled", True))

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def explicit_config(self):
        s = dict(self.solver)
        if "gamma_M" not in s and self.ghost.get("gamma_M") is not None:
            s["gamma_M"] = float(self.ghost["gamma_M"])
        if "gravity" in s:
            s["gravity"] = tuple(float(g) for g in s["gravity"])
        return _build(ExplicitConfig, s, "solver.explicit")

    def implicit_config(self):
        s = dict(self.solver)
        s.setdefault("ghost_enabled", self.ghost_enabled)
        if "gamma_k" not in s and self.ghost.get("gamma_k") is not None:
            s["gamma_k"] = float(self.ghost["gamma_k"])
        if "gravity" in s:
            s["gravity"] = tuple(float(g) for g in s["gravity"])
        return _build(ImplicitConfig, s, "solver.implicit")

    def material_objects(self):
        return [parse_material(m, k) for k, m in enumerate(self.materials)]


def _build(cls, values, where):
    known = set(cls.__dataclass_fields__)
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def parse_material(entry, index=0):
    if not isinstance(entry, dict):
        raise ConfigurationError(f"materials[{index}] must be a mapping")
    try:
        ys = entry.get("yield_stress")
        return Material(
            E=float(entry["E"]),
            nu=float(entry.get("nu", 0.0)),
            rho0=float(entry.get("rho", entry.get("rho0", 0.0))),
            yield_stress=None if ys is None else float(ys),
        )
    except KeyError as exc:
        raise ConfigurationError(f"materials[{index}] is missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"materials[{index}]: {exc}") from exc


def _require(data, key, kind, where="config"):
    if key not in data:
        raise ConfigurationError(f"{where}: missing '{key}'")
    val = data[key]
    if not isinstance(val, kind):
        raise ConfigurationError(f"{where}: '{key}' has the wrong type")
    return val


def parse_config(data, base_dir="."):
    """Validate a decoded YAML mapping and return a :class:`ScenarioConfig`."""
    if not isinstance(data, dict):
        raise ConfigurationError("scenario file must contain a mapping")
    name = _require(data, "scenario", str)
    if name not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario '{name}', expected one of {SCENARIOS}")
    grid = _require(data, "grid", dict)
    for key in ("h", "nx", "ny"):
        if key not in grid:
            raise ConfigurationError(f"grid: missing '{key}'")
    materials = _require(data, "materials", list)
    if not materials:
        raise ConfigurationError("at least one material is required")
    bodies = _require(data, "bodies", list)
    if not bodies:
        raise ConfigurationError("at least one body is required")
    base_dir = Path(base_dir)
    for k, b in enumerate(bodies):
        if not isinstance(b, dict) or b.get("generator") not in GENERATORS:
            raise ConfigurationError(f"bodies[{k}]: generator must be one of {GENERATORS}")
        if b["generator"] == "csv":
            p = Path(b.get("path", ""))
            p = p if p.is_absolute() else base_dir / p
            if not p.is_file():
                raise ConfigurationError(f"bodies[{k}]: point cloud '{p}' does not exist")
        if not 0 <= int(b.get("material", 0)) < len(materials):
            raise ConfigurationError(f"bodies[{k}]: unknown material")

    solver = _require(data, "solver", dict)
    kinds = [k for k in solver if k in SOLVER_KINDS]
    if len(kinds) != 1 or len(solver) != 1:
        raise ConfigurationError(f"solver: exactly one of {SOLVER_KINDS} is required")
    kind = kinds[0]
    block = solver[kind] or {}
    if not isinstance(block, dict):
        raise ConfigurationError(f"solver.{kind} must be a mapping")

    ghost = data.get("ghost") or {}
    output = data.get("output") or {}
    loads = data.get("loads") or []
    known = {"scenario", "grid", "materials", "bodies", "solver", "ghost", "output", "loads"}
    cfg = ScenarioConfig(
        name=name,
        grid=grid,
        materials=materials,
        bodies=bodies,
        solver_kind=kind,
        solver=block,
        ghost=ghost,
        output=output,
        loads=loads,
        extra={k: v for k, v in data.items() if k not in known},
        base_dir=base_dir,
    )
    cfg.material_objects()
    if kind == "explicit":
        cfg.explicit_config()
    elif kind == "implicit":
        cfg.implicit_config()
    return cfg


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file '{path}' not found")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"could not parse '{path}': {exc}") from exc
    return parse_config(data, base_dir=path.parent)
