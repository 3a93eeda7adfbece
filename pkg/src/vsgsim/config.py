"""Scenario files: TOML with [grid], [vsg], [controller] and [scenario] sections."""

from __future__ import annotations

import sys
from dataclasses import fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controllers import STRATEGIES, VsgConfig
from .errors import ConfigError
from .grid import GridParams
from .simulator import Scenario

GRID_KEYS = {f.name for f in fields(GridParams)}
# the filter capacitor is accepted for completeness but is not part of the series impedance
GRID_INFO_KEYS = {"c_filter"}
VSG_KEYS = {"j0", "j_min", "j_max", "d_p0"}
CONTROLLER_KEYS = {f.name for f in fields(VsgConfig)} - VSG_KEYS
SCENARIO_KEYS = {"duration", "dt", "p_initial", "q_initial", "events", "strategy"}
SECTIONS = ("grid", "vsg", "controller", "scenario")


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}", f"expected a number, got {value!r}")
    return float(value)


def _section(doc, name, allowed, info=frozenset()):
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(name, "must be a table")
    unknown = set(raw) - allowed - info
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", f"unknown key (valid keys: {', '.join(sorted(allowed))})")
    return {k: v for k, v in raw.items() if k in allowed}


def _events(raw):
    if not isinstance(raw, list):
        raise ConfigError("scenario.events", "must be an array of {time, p_m} tables")
    out = []
    for k, ev in enumerate(raw):
        where = f"scenario.events[{k}]"
        if isinstance(ev, dict):
            extra = set(ev) - {"time", "p_m"}
            if extra or "time" not in ev or "p_m" not in ev:
                raise ConfigError(where, "each event needs exactly the keys 'time' and 'p_m'")
            t, p = ev["time"], ev["p_m"]
        elif isinstance(ev, list) and len(ev) == 2:
            t, p = ev
        else:
            raise ConfigError(where, "expected {time = <s>, p_m = <W>} or [time, p_m]")
        out.append((_number(where, "time", t), _number(where, "p_m", p)))
    return tuple(out)


def scenario_from_dict(doc: dict, dt_override: float | None = None) -> Scenario:
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown section (valid: {', '.join(SECTIONS)})")
    grid_kw = {k: _number("grid", k, v) for k, v in _section(doc, "grid", GRID_KEYS, GRID_INFO_KEYS).items()}
    vsg_kw = {k: _number("vsg", k, v) for k, v in _section(doc, "vsg", VSG_KEYS).items()}
    ctl = _section(doc, "controller", CONTROLLER_KEYS)
    for k, v in ctl.items():
        if k == "inertia_law":
            if not isinstance(v, str):
                raise ConfigError("controller.inertia_law", "expected a string")
            vsg_kw[k] = v
        else:
            vsg_kw[k] = _number("controller", k, v)
    sc = _section(doc, "scenario", SCENARIO_KEYS)
    sc_kw = {}
    for k, v in sc.items():
        if k == "events":
            sc_kw[k] = _events(v)
        elif k == "strategy":
            if v not in STRATEGIES:
                raise ConfigError("scenario.strategy", f"unknown strategy {v!r}; valid names: {', '.join(STRATEGIES)}")
            sc_kw[k] = v
        else:
            sc_kw[k] = _number("scenario", k, v)
    if dt_override is not None:
        sc_kw["dt"] = float(dt_override)
    grid = _prefixed("grid", GridParams, grid_kw)
    vsg = _prefixed("controller", VsgConfig, vsg_kw)
    return Scenario(grid=grid, vsg=vsg, **sc_kw)


def _prefixed(section, cls, kw):
    try:
        return cls(**kw)
    except ConfigError as exc:
        field = exc.field
        if "." not in field:
            field = f"{'vsg' if field in VSG_KEYS else section}.{field}"
        raise ConfigError(field, str(exc).split(": ", 1)[1]) from None


def load_scenario(path, dt_override: float | None = None) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(str(path), "file not found")
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"parse error: {exc}") from None
    return scenario_from_dict(doc, dt_override)

