"""TOML scenario files and ``key=value`` overrides.

Top-level keys map to :class:`~consip.simulator.ScenarioConfig` fields; the
nested dataclasses live in tables of the same name::

    t_app = 30.0            # s
    t_update = 30.0         # min, or "disabled"
    duration_years = 1.0    # alternative to duration (s)
    consip_enabled = true
    slot_i = 1
    slot_j = 51
    seed = 1

    [slotframe]
    n_slots = 101
    slot_duration_ms = 20.0

    [losses]
    eps_f = 0.126
    eps_a = 0.08
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path
from typing import Any, Iterable, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from consip.energy import EnergyParams, FrameSizeModel
from consip.hopping import SlotframeConfig
from consip.simulator import YEAR_S, LossParams, ScenarioConfig

_NESTED = {
    "slotframe": SlotframeConfig,
    "frames": FrameSizeModel,
    "losses": LossParams,
    "energy": EnergyParams,
}


class ConfigError(ValueError):
    pass


def _field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _coerce(name: str, value: Any) -> Any:
    if name == "t_update" and (value is False or (isinstance(value, str) and value.lower() in ("disabled", "none", "off"))):
        return None
    return value


def from_mapping(data: dict[str, Any], base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    cfg = base or ScenarioConfig()
    top: dict[str, Any] = {}
    for key, value in data.items():
        if key in _NESTED:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            cls = _NESTED[key]
            unknown = set(value) - _field_names(cls)
            if unknown:
                raise ConfigError(f"unknown keys in [{key}]: {sorted(unknown)}")
            try:
                top[key] = dataclasses.replace(getattr(cfg, key), **value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"[{key}]: {e}") from None
        elif key == "duration_years":
            top["duration"] = float(value) * YEAR_S
        elif key in _field_names(ScenarioConfig):
            top[key] = _coerce(key, value)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    try:
        cfg = dataclasses.replace(cfg, **top)
        cfg.validate()
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        data = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{p}: {e}") from None
    return from_mapping(data)


def _parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg: ScenarioConfig, overrides: Iterable[str]) -> ScenarioConfig:
    """Apply ``key=value`` (or ``table.key=value``) overrides."""
    data: dict[str, Any] = {}
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        key = key.strip()
        value = _parse_value(raw.strip())
        if "." in key:
            table, sub = key.split(".", 1)
            data.setdefault(table, {})[sub] = value
        else:
            data[key] = value
    return from_mapping(data, cfg)


def _toml_value(v: Any) -> str:
    if v is None:
        return '"disabled"'
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(v)


def dump_config(cfg: ScenarioConfig) -> str:
    lines = []
    nested = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in _NESTED:
            nested.append((f.name, v))
        elif f.name == "t_update" and v is None:
            lines.append('t_update = "disabled"')
        else:
            lines.append(f"{f.name} = {_toml_value(v)}")
    for name, obj in nested:
        lines.append("")
        lines.append(f"[{name}]")
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"
