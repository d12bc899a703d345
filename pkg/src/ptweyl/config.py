"""Experiment configuration: JSON schema (version 1) and validation.

Errors name the offending JSON path, e.g. ``$.regions[0].radius``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .randomize import GaussianSchedule, PlanError
from .symbols import OperatorSpec, QuadratureGrid
from .weylgeom import Region, region_from_json

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass
class ExperimentConfig:
    mode: str
    operator: OperatorSpec
    regions: list[Region]
    trials: int = 1
    base_seed: int = 0
    K: int = 64
    # semiclassical ledger inputs
    s: float = 1.0
    eps: float = 0.25
    tau0: float | None = None
    coupling: float | None = None
    R: float = 1.0
    C: float = 1.0
    # large-eigenvalue inputs
    schedule: GaussianSchedule | None = None
    lambdas: list[float] = field(default_factory=list)
    trust_eta: float = 0.5
    validate_trust: bool = False
    # quadrature / reporting
    nx: int = 512
    nxi: int = 1024
    xi_max: float | None = None
    r_list: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.2])
    eps_tilde_list: list[float] = field(default_factory=lambda: [0.01, 0.1, 1.0])
    rel_tols: list[float] = field(default_factory=lambda: [0.15])
    range_tol: float = 0.05
    output: str | None = None
    raw: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def h(self) -> float:
        return self.operator.h

    def grid(self, xi_max: float) -> QuadratureGrid:
        return QuadratureGrid(self.nx, self.nxi, self.xi_max or xi_max)

    def hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _get(obj: dict, key: str, path: str, typ, default=..., check=None):
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    val = obj[key]
    if val is None and default is None:
        return None
    try:
        val = typ(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", f"expected {typ.__name__}, got {val!r}") from None
    if check is not None and not check(val):
        raise ConfigError(f"{path}.{key}", f"value {val!r} out of range")
    return val


def _float_list(obj, key, path, default):
    if key not in obj:
        return list(default)
    val = obj[key]
    if not isinstance(val, list):
        raise ConfigError(f"{path}.{key}", "expected a list")
    out = []
    for i, v in enumerate(val):
        try:
            out.append(float(v))
        except (TypeError, ValueError):
            raise ConfigError(f"{path}.{key}[{i}]", f"expected a number, got {v!r}") from None
    return out


def parse_config(obj: dict[str, Any]) -> ExperimentConfig:
    p = "$"
    if not isinstance(obj, dict):
        raise ConfigError(p, "config must be a JSON object")
    version = _get(obj, "version", p, int)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{p}.version", f"unsupported schema version {version}")
    mode = _get(obj, "mode", p, str, check=lambda m: m in ("semiclassical", "large"))
    if "operator" not in obj:
        raise ConfigError(f"{p}.operator", "missing required field")
    try:
        op = OperatorSpec.from_json(obj["operator"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{p}.operator", str(exc)) from None
    if not op.is_elliptic():
        raise ConfigError(f"{p}.operator", "principal coefficient vanishes (not elliptic)")

    regs = obj.get("regions")
    if not isinstance(regs, list) or not regs:
        raise ConfigError(f"{p}.regions", "expected a non-empty list")
    regions = []
    for i, r in enumerate(regs):
        try:
            regions.append(region_from_json(r))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{p}.regions[{i}]", str(exc)) from None

    cfg = ExperimentConfig(mode=mode, operator=op, regions=regions, raw=obj)
    cfg.trials = _get(obj, "trials", p, int, 1, lambda v: v >= 1)
    cfg.base_seed = _get(obj, "base_seed", p, int, 0, lambda v: 0 <= v < 2**64)
    cfg.K = _get(obj, "K", p, int, 64, lambda v: v >= 8)

    pl = obj.get("plan", {})
    pp = f"{p}.plan"
    cfg.s = _get(pl, "s", pp, float, 1.0)
    cfg.eps = _get(pl, "eps", pp, float, 0.25)
    cfg.tau0 = _get(pl, "tau0", pp, float, None)
    cfg.coupling = _get(pl, "coupling", pp, float, None, lambda v: v >= 0)
    cfg.R = _get(pl, "R", pp, float, 1.0, lambda v: v > 0)
    cfg.C = _get(pl, "C", pp, float, 1.0, lambda v: v > 0)

    g = obj.get("grid", {})
    gp = f"{p}.grid"
    cfg.nx = _get(g, "nx", gp, int, 512, lambda v: v >= 16)
    cfg.nxi = _get(g, "nxi", gp, int, 1024, lambda v: v >= 16)
    cfg.xi_max = _get(g, "xi_max", gp, float, None, lambda v: v > 0)

    cfg.r_list = _float_list(obj, "r_list", p, cfg.r_list)
    cfg.eps_tilde_list = _float_list(obj, "eps_tilde_list", p, cfg.eps_tilde_list)
    cfg.rel_tols = _float_list(obj, "rel_tols", p, cfg.rel_tols)
    cfg.range_tol = _get(obj, "range_tol", p, float, 0.05, lambda v: v > 0)
    cfg.output = _get(obj, "output", p, str, None)

    if mode == "large":
        sc = obj.get("schedule")
        if not isinstance(sc, dict):
            raise ConfigError(f"{p}.schedule", "large mode needs a schedule object")
        sp = f"{p}.schedule"
        try:
            cfg.schedule = GaussianSchedule(
                rho=_get(sc, "rho", sp, float),
                beta=_get(sc, "beta", sp, float, 0.0),
                exponent_scale=_get(sc, "exponent_scale", sp, int, 0),
                s=_get(sc, "s", sp, float, 1.0),
                eps=_get(sc, "eps", sp, float, 0.25),
            )
        except PlanError as exc:
            raise ConfigError(sp, str(exc)) from None
        cfg.lambdas = _float_list(obj, "lambdas", p, [])
        if not cfg.lambdas:
            raise ConfigError(f"{p}.lambdas", "large mode needs a non-empty lambda list")
        if any(v <= 0 for v in cfg.lambdas):
            raise ConfigError(f"{p}.lambdas", "lambda values must be positive")
        cfg.trust_eta = _get(obj, "trust_eta", p, float, 0.5, lambda v: 0 < v <= 1)
        cfg.validate_trust = bool(obj.get("validate_trust", False))
        if op.h != 1.0:
            raise ConfigError(f"{p}.operator.h", "large mode uses the unscaled operator, h = 1")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    return parse_config(obj)
