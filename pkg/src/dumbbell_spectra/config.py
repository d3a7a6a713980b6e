"""Run configuration: JSON in, validated dataclasses out, and back.

Every rejected field is reported with a JSON pointer (``/mesh/h_bulk``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError
from .geometry import BulkDomain, DumbbellSpec, NeckProfile, validate

DEFAULT_WIDTH = 28.0 ** (1.0 / 3.0)


@dataclass(frozen=True)
class BulkConfig:
    kind: str = "rectangle"
    width: float = DEFAULT_WIDTH
    height: float = 1.0
    offset: float | None = None
    ell: float = 0.25
    vertices: list | None = None
    attachment: list | None = None


@dataclass(frozen=True)
class NeckConfig:
    kind: str = "constant"
    value: float = 1.0
    samples: list | None = None
    length: float = 2.0


@dataclass(frozen=True)
class GeometryConfig:
    bulk: BulkConfig = field(default_factory=BulkConfig)
    neck: NeckConfig = field(default_factory=NeckConfig)
    epsilon: float = 0.05


@dataclass(frozen=True)
class MeshConfig:
    h_bulk: float = 0.02
    neck_layers: int = 2
    refinements: int = 0


@dataclass(frozen=True)
class SolverConfig:
    k_eigs: int = 10
    tol: float = 1e-8
    max_krylov: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class SLConfig:
    nodes: int = 4096
    guard: float = 1e-6


@dataclass(frozen=True)
class SweepConfig:
    epsilons: list = field(default_factory=lambda: [0.08, 0.04, 0.02, 0.01])
    workers: int = 1


@dataclass(frozen=True)
class TargetConfig:
    mode: list | None = None
    mu: float | None = None


@dataclass(frozen=True)
class NodalConfig:
    threshold: float = 1e-8


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    emit_svg: bool = False
    emit_csv: bool = True


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sl: SLConfig = field(default_factory=SLConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    target: TargetConfig = field(default_factory=TargetConfig)
    nodal: NodalConfig = field(default_factory=NodalConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def replace_seed(self, seed: int) -> "RunConfig":
        d = self.to_dict()
        d["solver"]["seed"] = int(seed)
        return parse_config(d)

    def spec(self, epsilon: float | None = None) -> DumbbellSpec:
        """The dumbbell described by the geometry section."""
        return build_spec(self.geometry, epsilon)


_SECTIONS = {
    "geometry": GeometryConfig, "mesh": MeshConfig, "solver": SolverConfig, "sl": SLConfig,
    "sweep": SweepConfig, "target": TargetConfig, "nodal": NodalConfig, "output": OutputConfig,
}
_NESTED = {("geometry", "bulk"): BulkConfig, ("geometry", "neck"): NeckConfig}

# (kind, positive, nullable)
_RULES = {
    "geometry/bulk/kind": ("enum", ("rectangle", "polygon")),
    "geometry/bulk/width": ("pos", False), "geometry/bulk/height": ("pos", False),
    "geometry/bulk/offset": ("num", True), "geometry/bulk/ell": ("pos", False),
    "geometry/bulk/vertices": ("points", True), "geometry/bulk/attachment": ("point", True),
    "geometry/neck/kind": ("enum", ("constant", "piecewise_linear")),
    "geometry/neck/value": ("pos", False), "geometry/neck/samples": ("numlist", True),
    "geometry/neck/length": ("pos", False),
    "geometry/epsilon": ("pos", False),
    "mesh/h_bulk": ("pos", False), "mesh/neck_layers": ("int", 2), "mesh/refinements": ("int", 0),
    "solver/k_eigs": ("int", 1), "solver/tol": ("pos", False),
    "solver/max_krylov": ("int?", 1), "solver/seed": ("int", 0),
    "sl/nodes": ("int", 4), "sl/guard": ("pos", False),
    "sweep/epsilons": ("decreasing", None), "sweep/workers": ("int", 1),
    "target/mode": ("mode", True), "target/mu": ("num", True),
    "nodal/threshold": ("pos", False),
    "output/dir": ("str", None), "output/emit_svg": ("bool", None), "output/emit_csv": ("bool", None),
}


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check(ptr: str, v):
    kind, arg = _RULES[ptr]
    where = "/" + ptr
    if v is None:
        if kind in ("int?",) or (kind in ("num", "points", "point", "numlist", "mode") and arg):
            return None
        raise ConfigError("must not be null", where)
    if kind == "enum":
        if v not in arg:
            raise ConfigError(f"must be one of {list(arg)}", where)
        return v
    if kind in ("pos", "num"):
        if not _is_num(v):
            raise ConfigError("must be a finite number", where)
        if kind == "pos" and not v > 0:
            raise ConfigError("must be positive", where)
        return float(v)
    if kind in ("int", "int?"):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError("must be an integer", where)
        if v < arg:
            raise ConfigError(f"must be >= {arg}", where)
        return v
    if kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError("must be true or false", where)
        return v
    if kind == "str":
        if not isinstance(v, str) or not v:
            raise ConfigError("must be a non-empty string", where)
        return v
    if kind == "numlist":
        if not isinstance(v, list) or not all(_is_num(x) for x in v):
            raise ConfigError("must be a list of numbers", where)
        return [float(x) for x in v]
    if kind == "point":
        if not (isinstance(v, list) and len(v) == 2 and all(_is_num(x) for x in v)):
            raise ConfigError("must be [x, y]", where)
        return [float(x) for x in v]
    if kind == "points":
        if not isinstance(v, list) or len(v) < 3:
            raise ConfigError("must list at least 3 points", where)
        for i, p in enumerate(v):
            if not (isinstance(p, list) and len(p) == 2 and all(_is_num(x) for x in p)):
                raise ConfigError("must be [x, y]", f"{where}/{i}")
        return [[float(x) for x in p] for p in v]
    if kind == "mode":
        if not (isinstance(v, list) and len(v) == 2
                and all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in v)):
            raise ConfigError("must be [j, n] with nonnegative integers", where)
        return list(v)
    if kind == "decreasing":
        if not isinstance(v, list) or not v:
            raise ConfigError("must be a non-empty list", where)
        for i, x in enumerate(v):
            if not _is_num(x) or not 0 < x <= 1:
                raise ConfigError("must be a number in (0, 1]", f"{where}/{i}")
        for i in range(1, len(v)):
            if not v[i] < v[i - 1]:
                raise ConfigError("epsilons must be strictly decreasing", f"{where}/{i}")
        return [float(x) for x in v]
    raise AssertionError(kind)


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError("must be an object", "/" + path if path else "")
    names = set(cls.__dataclass_fields__)
    for key in data:
        if key not in names:
            raise ConfigError("unknown field", f"/{path}/{key}" if path else f"/{key}")
    kwargs = {}
    for name in cls.__dataclass_fields__:
        if name not in data:
            continue
        sub = f"{path}/{name}" if path else name
        key = tuple(sub.split("/"))
        if path == "" and name in _SECTIONS:
            kwargs[name] = _build(_SECTIONS[name], data[name], sub)
        elif key in _NESTED:
            kwargs[name] = _build(_NESTED[key], data[name], sub)
        else:
            kwargs[name] = _check(sub, data[name])
    return cls(**kwargs)


def parse_config(data) -> RunConfig:
    """Validated :class:`RunConfig` from a JSON-like mapping.

    Raises
    ------
    ConfigError
        Carrying the JSON pointer of the first offending field.
    """
    cfg = _build(RunConfig, data, "")
    g = cfg.geometry
    if g.bulk.kind == "polygon" and (g.bulk.vertices is None or g.bulk.attachment is None):
        raise ConfigError("polygon bulks need vertices and attachment", "/geometry/bulk")
    if g.neck.kind == "piecewise_linear" and g.neck.samples is None:
        raise ConfigError("piecewise_linear necks need samples", "/geometry/neck/samples")
    if cfg.target.mode is not None and cfg.target.mu is not None:
        raise ConfigError("give either mode or mu, not both", "/target")
    problems = validate(build_spec(g))
    if problems:
        raise ConfigError("; ".join(problems), "/geometry")
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", "") from exc
    return parse_config(data)


def build_spec(g: GeometryConfig, epsilon: float | None = None) -> DumbbellSpec:
    b, n = g.bulk, g.neck
    if b.kind == "rectangle":
        bulk = BulkDomain.rectangle(b.width, b.height, b.offset, b.ell)
    else:
        bulk = BulkDomain.polygon(b.vertices, b.attachment, b.ell)
    if n.kind == "constant":
        neck = NeckProfile.constant(n.value, n.length)
    else:
        neck = NeckProfile.piecewise_linear(n.samples, n.length)
    return DumbbellSpec(bulk, neck, g.epsilon if epsilon is None else float(epsilon))
