"""TOML run configuration: problem definition plus solver settings.

Layout::

    [domain]
    dimension = 1
    s = 0.25
    omega = [[0.0, 1.0]]
    alpha = 1.0          # optional, default 0
    beta = 1.0           # optional, default 0
    resolution = 64      # optional, nodes per axis
    margin = 1.0         # optional, box padding in diameters of Omega
    box = [[-1.0, 2.0]]  # optional, overrides margin

    [exponents.p]
    family = "constant"
    value = 2.0

    [exponents.r]
    family = "bump"
    base = 2.0
    height = -0.9
    center = [0.5]
    radius = 0.2

    [solver]
    luxemburg_tol = 1e-10

``[exponents.q]`` may be omitted, meaning q(x) = p(x, x).  A ``samples``
family reads ``values = [...]`` or ``file = "path"`` (relative to the config
file).  Every solver setting can be overridden by an environment variable
``FRACPX_<NAME>``, e.g. ``FRACPX_LUXEMBURG_TOL=1e-20``.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .exponents import ExponentFamily, ProblemConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_PREFIX = "FRACPX_"


class ConfigError(ValueError):
    """Malformed or incomplete configuration; the message names the field."""


@dataclass(frozen=True)
class SolverSettings:
    luxemburg_tol: float = 1e-10
    manifold_tol: float = 1e-8
    residual_tol: float = 1e-6
    collapse_norm: float = 1e-4
    max_iter: int = 10_000
    restarts: int = 8
    starts: int = 8
    seed: int = 0
    samples: int = 1000
    workers: int = 1
    t_values: tuple = (1e-4, 1e-3, 1e-2, 1e-1)

    @classmethod
    def from_mapping(cls, data: Mapping, where: str = "solver") -> "SolverSettings":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown field '{where}.{key}'")
            kwargs[key] = _coerce(key, value, known[key].default, where)
        return cls(**kwargs)

    def with_env(self, environ: Optional[Mapping[str, str]] = None) -> "SolverSettings":
        environ = os.environ if environ is None else environ
        changes = {}
        for f in fields(self):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is not None:
                value = [float(x) for x in raw.replace(",", " ").split()] if f.name == "t_values" else raw
                changes[f.name] = _coerce(f.name, value, f.default, "environment")
        return replace(self, **changes) if changes else self

    def to_dict(self) -> dict:
        out = asdict(self)
        out["t_values"] = list(self.t_values)
        return out


def _coerce(key, value, default, where):
    try:
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{where}.{key}': {value!r}") from exc
    return value


def _require(table: Mapping, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing required field '{where}.{key}'")
    return table[key]


def _family(table: Mapping, where: str, base_dir: Path) -> ExponentFamily:
    if not isinstance(table, Mapping):
        raise ConfigError(f"'{where}' must be a table")
    kind = _require(table, "family", where)
    params = {k: v for k, v in table.items() if k != "family"}
    try:
        if kind == "constant":
            return ExponentFamily.constant(_require(params, "value", where))
        if kind == "affine":
            return ExponentFamily.affine(_require(params, "base", where), _require(params, "slope", where))
        if kind == "bump":
            return ExponentFamily.bump(_require(params, "base", where), _require(params, "height", where),
                                       _require(params, "center", where), _require(params, "radius", where))
        if kind == "samples":
            if "file" in params:
                path = base_dir / params["file"]
                try:
                    values = np.loadtxt(path, comments="#", delimiter=None, ndmin=1)
                except OSError as exc:
                    raise ConfigError(f"'{where}.file': cannot read {path}") from exc
            else:
                values = _require(params, "values", where)
            return ExponentFamily.samples(values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{where}': {exc}") from exc
    raise ConfigError(f"'{where}.family': unknown family {kind!r}")


def parse_config(data: Mapping, base_dir: Path = Path(".")) -> tuple:
    """Build (ProblemConfig, SolverSettings) from a parsed TOML document."""
    domain = _require(data, "domain", "")
    exps = _require(data, "exponents", "")
    unknown = set(data) - {"domain", "exponents", "solver"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    allowed = {"dimension", "s", "omega", "alpha", "beta", "resolution", "margin", "box"}
    extra = set(domain) - allowed
    if extra:
        raise ConfigError(f"unknown field 'domain.{sorted(extra)[0]}'")
    kwargs = {k: _require(domain, k, "domain") for k in ("dimension", "s", "omega")}
    for k in ("alpha", "beta", "resolution", "margin", "box"):
        if k in domain:
            kwargs[k] = domain[k]
    kwargs["p"] = _family(_require(exps, "p", "exponents"), "exponents.p", base_dir)
    kwargs["r"] = _family(_require(exps, "r", "exponents"), "exponents.r", base_dir)
    if "q" in exps:
        kwargs["q"] = _family(exps["q"], "exponents.q", base_dir)
    try:
        config = ProblemConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc
    solver = SolverSettings.from_mapping(data.get("solver", {}))
    return config, solver


def load_config(path, environ: Optional[Mapping[str, str]] = None) -> tuple:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    config, solver = parse_config(data, path.parent)
    return config, solver.with_env(environ)


def config_hash(config: ProblemConfig) -> str:
    """SHA-256 of the canonical JSON form of the resolved configuration."""
    text = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()
