"""Run configuration: JSON loading with diagnostics, schema validation, and resolution to objects."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import jsonschema
import numpy as np

from . import catalog as cat
from . import group_core as gc
from .catalog import CatalogEntry, level_set_function
from .expressions import Expression, ExpressionError, _allowed, _env, function_from_spec
from .splitting import Box, Splitting


class ConfigError(ValueError):
    pass


def load_schema(name: str) -> dict:
    return json.loads(resources.files("carnot_calc").joinpath("schemas", f"{name}.schema.json").read_text())


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = ["$"] + [f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path]
    return "".join(parts)


def validate(data: dict, schema_name: str = "run_config") -> None:
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{_field_path(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))


def read_config(path) -> dict:
    """Parse a JSON config file; syntax errors report line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; values in ``override`` win, None values are skipped."""
    out = copy.deepcopy(base)
    for key, val in override.items():
        if val is None:
            continue
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


# resolution ------------------------------------------------------------------


def resolve_group(spec) -> gc.GroupSpec:
    try:
        if isinstance(spec, str):
            return gc.builtin(spec)
        if "path" in spec:
            return gc.load_group_json(spec["path"])
        if "step2_skew" in spec:
            return gc.step2_from_skew(np.asarray(spec["step2_skew"], dtype=float), name=spec.get("name", "step2"))
        return gc.load_group_json(spec)
    except KeyError as exc:
        raise ConfigError(f"$.group: {exc.args[0]}") from None
    except OSError as exc:
        raise ConfigError(f"$.group.path: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$.group.path: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def resolve_box(spec, dim: int, default: Optional[Box] = None) -> Box:
    if spec is None:
        return default if default is not None else Box.cube(dim, 0.5)
    if isinstance(spec, str):
        if spec == "unit":
            return Box.unit(dim)
        if spec == "cube":
            return Box.cube(dim)
        raise ConfigError(f"unknown box name '{spec}' (use 'unit', 'cube' or {{lo, hi}})")
    if isinstance(spec, (int, float)):
        return Box.cube(dim, float(spec))
    box = Box(spec["lo"], spec["hi"])
    if box.dim != dim:
        raise ConfigError(f"box has dimension {box.dim}, W has dimension {dim}")
    return box


def _omega_from_exprs(sp: Splitting, exprs, params) -> Callable:
    if sp.k != 1:
        raise ConfigError("$.function.omega: expression ω is supported for k = 1")
    ncols = sp.group.m - sp.k
    if len(exprs) != ncols:
        raise ConfigError(f"$.function.omega: need {ncols} expressions, one per horizontal W direction")
    allowed = _allowed(sp, params)
    parsed = [Expression(e, allowed) for e in exprs]

    def omega(w):
        w = np.asarray(w, dtype=float)
        env = _env(sp, w, params)
        cols = [np.broadcast_to(np.asarray(p(env), dtype=float), w.shape[:-1]) for p in parsed]
        return np.stack(cols, axis=-1)[..., None, :]

    return omega


@dataclass
class Resolved:
    """Everything a command needs, built once from the validated config."""

    config: dict
    group: Optional[gc.GroupSpec]
    entry: Optional[CatalogEntry]
    region: Optional[Box]
    a0: Optional[np.ndarray]
    seed: int
    jobs: int

    @property
    def splitting(self) -> Splitting:
        return self.entry.splitting

    @property
    def phi(self):
        return self.entry.phi

    def tol(self, key: str, default: float) -> float:
        return float(self.config.get("tolerances", {}).get(key, default))


def resolve(config: dict, need_function: bool = True) -> Resolved:
    validate(config)
    seed = int(config.get("seed", 0))
    jobs = int(config.get("jobs", 1))
    group = resolve_group(config["group"]) if "group" in config else None
    entry = None
    params = dict(config.get("params", {}))
    try:
        if "catalog" in config:
            if group is not None and "group" not in params:
                params["group"] = group
            try:
                entry = cat.get(config["catalog"], **params)
            except KeyError as exc:
                raise ConfigError(f"$.catalog: {exc.args[0]}") from None
            except TypeError as exc:
                raise ConfigError(f"$.params: {exc}") from None
            group = entry.group if entry.group is not None else group
        elif "function" in config:
            if group is None:
                raise ConfigError("$.group: a function definition needs a group")
            sp = Splitting(group, int(config.get("k", 1)))
            fspec = config["function"]
            numeric = {k: float(v) for k, v in params.items() if isinstance(v, (int, float))}
            phi = function_from_spec(sp, fspec, numeric)
            merged = dict(fspec.get("params", {}))
            merged.update(numeric)
            omega = _omega_from_exprs(sp, fspec["omega"], merged) if "omega" in fspec else None
            entry = CatalogEntry(
                name=phi.name, group=group, splitting=sp, phi=phi, omega=omega,
                params=merged, level_set=level_set_function(phi) if sp.k == 1 else None,
            )
        elif need_function:
            raise ConfigError("$: give either 'catalog' or 'function'")
    except ExpressionError as exc:
        raise ConfigError(f"$.function: {exc}") from None
    region = a0 = None
    if entry is not None and entry.splitting is not None:
        dim = entry.splitting.dim_w
        region = resolve_box(config.get("region"), dim, entry.region)
        if entry.phi.domain is not None and not np.all(entry.phi.in_domain(np.stack([region.lo, region.hi]))):
            raise ConfigError("$.region: region is not inside the domain of the function")
        a0 = np.asarray(config["a0"], dtype=float) if "a0" in config else (entry.a0 if entry.a0 is not None else region.center)
        if a0.shape != (dim,):
            raise ConfigError(f"$.a0: needs {dim} W-coordinates")
    return Resolved(config, group, entry, region, a0, seed, jobs)
