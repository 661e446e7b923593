"""Run configuration files.

A config is a JSON object::

    {
      "surface": {"kind": "sphere"},
      "m": 1,
      "lambda": 8.0,
      "mesh": 2048,
      "tolerances": {"rtol": 1e-11}
    }

Errors name the offending field and, where it can be found, the line.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError, GeometryError
from .geometry import Surface, surface_from_config
from .settings import Settings

MESH_MIN, MESH_MAX = 256, 16384
KNOWN = {"surface", "m", "lambda", "lambda_range", "steps", "count", "mesh", "evolve_mesh",
         "tolerances", "scan", "path", "sources", "T", "initial", "out"}
TOLERANCES = {f.name for f in dataclasses.fields(Settings) if f.type in ("float", float)}


@dataclass
class RunConfig:
    surface: Surface
    m: int
    lam: Optional[float] = None
    lam_range: Optional[tuple] = None
    steps: int = 41
    count: int = 4
    mesh: int = 2048
    evolve_mesh: int = 1024
    tolerances: dict = field(default_factory=dict)
    scan: dict = field(default_factory=dict)
    path: Optional[list] = None
    sources: Optional[list] = None
    T: Optional[float] = None
    initial: Optional[dict] = None
    out: str = "out"
    raw: dict = field(default_factory=dict, repr=False)

    def settings(self, base: Settings = Settings()) -> Settings:
        return dataclasses.replace(base, mesh_size=self.mesh, evolve_mesh=self.evolve_mesh,
                                   **self.tolerances)

    def require_lambda(self) -> float:
        if self.lam is None:
            raise ConfigError("field 'lambda': required for this command")
        return self.lam


def _line_of(text: str, key: str) -> Optional[int]:
    needle = json.dumps(key) + ":"
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line.replace('" :', '":'):
            return i
    return None


def _fail(text, key, msg):
    line = _line_of(text, key) if text else None
    where = f"line {line}, " if line else ""
    raise ConfigError(f"{where}field '{key}': {msg}")


def _mesh_ok(n) -> bool:
    return isinstance(n, int) and not isinstance(n, bool) and MESH_MIN <= n <= MESH_MAX and n & (n - 1) == 0


def _number(text, key, value, positive=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(text, key, f"expected a number, got {value!r}")
    if positive and not value > 0:
        _fail(text, key, f"must be positive, got {value!r}")
    return float(value)


def from_dict(raw: dict, text: str = "") -> RunConfig:
    """Validate a parsed config; ``text`` (the source) is used for line numbers."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - KNOWN)
    if unknown:
        _fail(text, unknown[0], f"unknown field (known: {', '.join(sorted(KNOWN))})")
    if "surface" not in raw:
        raise ConfigError("field 'surface': required")
    if not isinstance(raw["surface"], dict):
        _fail(text, "surface", "expected an object such as {\"kind\": \"sphere\"}")
    try:
        surface = surface_from_config(raw["surface"])
    except GeometryError as exc:
        _fail(text, "surface", str(exc))
    m = raw.get("m", 1)
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        _fail(text, "m", f"expected an integer >= 1, got {m!r}")
    cfg = RunConfig(surface, m, raw=raw)
    if "lambda" in raw:
        cfg.lam = _number(text, "lambda", raw["lambda"])
    if "lambda_range" in raw:
        lr = raw["lambda_range"]
        if not (isinstance(lr, list) and len(lr) == 2):
            _fail(text, "lambda_range", "expected [lo, hi]")
        lo, hi = (_number(text, "lambda_range", x) for x in lr)
        if not lo < hi:
            _fail(text, "lambda_range", "need lo < hi")
        cfg.lam_range = (lo, hi)
    for key in ("steps", "count"):
        if key in raw:
            v = raw[key]
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                _fail(text, key, f"expected a positive integer, got {v!r}")
            setattr(cfg, key, v)
    for key in ("mesh", "evolve_mesh"):
        if key in raw:
            if not _mesh_ok(raw[key]):
                _fail(text, key, f"mesh sizes must be powers of two between {MESH_MIN} and "
                                 f"{MESH_MAX}, got {raw[key]!r}")
            setattr(cfg, key, raw[key])
    tol = raw.get("tolerances", {})
    if not isinstance(tol, dict):
        _fail(text, "tolerances", "expected an object")
    for key, v in tol.items():
        if key not in TOLERANCES:
            _fail(text, key, f"unknown tolerance (known: {', '.join(sorted(TOLERANCES))})")
        cfg.tolerances[key] = _number(text, key, v)
    if "scan" in raw:
        if not isinstance(raw["scan"], dict):
            _fail(text, "scan", "expected an object")
        cfg.scan = dict(raw["scan"])
    if "path" in raw:
        p = raw["path"]
        if not (isinstance(p, list) and p and all(isinstance(x, list) and len(x) == 2 for x in p)):
            _fail(text, "path", "expected a list of [eta, beta] pairs")
        cfg.path = [(_number(text, "path", a, False), _number(text, "path", b, False)) for a, b in p]
    if "sources" in raw:
        if not (isinstance(raw["sources"], list) and all(isinstance(x, str) for x in raw["sources"])):
            _fail(text, "sources", "expected a list of labels such as \"u0+\"")
        cfg.sources = list(raw["sources"])
    if "T" in raw:
        cfg.T = _number(text, "T", raw["T"])
    if "initial" in raw:
        if not isinstance(raw["initial"], dict):
            _fail(text, "initial", "expected an object")
        cfg.initial = dict(raw["initial"])
    if "out" in raw:
        if not isinstance(raw["out"], str):
            _fail(text, "out", "expected a directory name")
        cfg.out = raw["out"]
    return cfg


def load(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_dict(raw, text)
