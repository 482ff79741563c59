"""Run configuration loading: YAML files with nested sections, dotted-path
overrides, and strict unknown-key rejection.

Bundled per-scenario defaults live under ``fdsim/configs`` and are plain
files on purpose: every dimensional or radio constant the simulator uses is
auditable and overridable there rather than hidden in code.
"""

from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .csi import CqiTable, FeedbackConfig
from .engine import PfConfig, RunConfig
from .errors import ConfigError
from .link import LinkConfig
from .propagation import ChannelParams, NullingConfig, PathLossModel, SelfInterferenceConfig
from .radio import DuplexMode, PowerConfig
from .topology import ScenarioParams
from .traffic import TrafficConfig

BUNDLED = ("indoor", "outdoor_cluster", "outdoor_uniform")


def bundled_config_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"unknown bundled scenario {name!r}; available: {', '.join(BUNDLED)}")
    return Path(str(resources.files("fdsim").joinpath("configs").joinpath(f"{name}.yaml")))


def _coerce(value, typ, path: str):
    import typing
    origin = typing.get_origin(typ)
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if typ is str:
        return str(value)
    if typ is tuple or origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return tuple(value)
    return value


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {data!r}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        here = f"{path}.{key}" if path else key
        if key not in fields:
            raise ConfigError(f"unknown config key {here!r}")
        f = fields[key]
        if f.type in ("ChannelParams", ChannelParams):
            kwargs[key] = _build(ChannelParams, value, here)
        elif key == "models":
            if not isinstance(value, dict):
                raise ConfigError(f"{here}: expected a mapping of link classes")
            models = {}
            for link, spec in value.items():
                if link not in ("bs_ue", "ue_ue", "bs_bs"):
                    raise ConfigError(f"unknown link class {here}.{link!r}")
                models[link] = _build(PathLossModel, spec, f"{here}.{link}")
            kwargs[key] = models
        else:
            kwargs[key] = _coerce(value, _resolve_type(f.type), here)
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{path or cls.__name__}: {e}") from None


def _resolve_type(t):
    if isinstance(t, str):
        return {"float": float, "int": int, "bool": bool, "str": str, "tuple": tuple}.get(t, object)
    return t


_SECTIONS = {
    "scenario": ScenarioParams,
    "nulling": NullingConfig,
    "sic": SelfInterferenceConfig,
    "power": PowerConfig,
    "cqi": CqiTable,
    "feedback": FeedbackConfig,
    "link": LinkConfig,
    "traffic": TrafficConfig,
    "pf": PfConfig,
}
_SCALARS = {
    "scheduler": str, "n_drops": int, "ttis_per_drop": int, "seed": int,
    "total_rb_20mhz": int, "subband_rb": int, "debug_traces": bool,
}


def config_from_dict(data: dict) -> RunConfig:
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value, key)
        elif key == "mode":
            kwargs[key] = DuplexMode.parse(value)
        elif key in _SCALARS:
            kwargs[key] = _coerce(value, _SCALARS[key], key)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return RunConfig(**kwargs)


def apply_overrides(data: dict, overrides: list) -> dict:
    """Apply repeated ``--set section.key=value`` flags to the raw dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            raise ConfigError(f"override {item!r}: unparseable value") from None
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part!r} is not a section")
        node[parts[-1]] = value
    return data


def load_config(path, overrides: list = ()) -> tuple[RunConfig, dict]:
    """Parse a YAML run config; returns (config, raw-dict-after-overrides)."""
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"config file {path} is not valid YAML: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    data = apply_overrides(data, list(overrides))
    return config_from_dict(data), data


def flatten(data: dict, prefix: str = "") -> list:
    """Flatten a nested dict into sorted 'a.b.c=value' strings (config echo)."""
    out = []
    for key in sorted(data):
        value = data[key]
        here = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            out += flatten(value, here)
        else:
            out.append(f"{here}={value}")
    return out
