"""INI-style run configuration.

Sections group the :class:`~qcaching.simulator.SimConfig` fields, every key
is optional and falls back to the reference setup::

    [topology]
    topology = layered
    levels = 3
    width = 4

    [strategy]
    strategy = qcaching     ; shorthand for routing + caching
    exploration_rate = 0.05
    sync_period = 50        ; or "never"
"""
from __future__ import annotations

import configparser
import dataclasses
import io
import math
from pathlib import Path
from typing import Iterable

from .simulator import ConfigError, SimConfig

SECTIONS = {
    "topology": ("topology", "levels", "width", "nodes", "depth", "topology_file", "custodian_cost", "arrivals"),
    "workload": ("workload", "catalog_size", "beta", "trace_file", "epoch_length", "count_decay", "expectation"),
    "strategy": ("routing", "caching", "cache_size", "alpha", "exploration_rate", "sync_period",
                 "hop_budget_max", "frozen_q"),
    "run": ("steps", "seed", "warmup_fraction"),
}
_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}
_INTS = {"levels", "width", "nodes", "depth", "catalog_size", "epoch_length", "cache_size", "steps", "seed"}
_FLOATS = {"custodian_cost", "beta", "count_decay", "alpha", "exploration_rate", "warmup_fraction"}
_BOOLS = {"expectation"}
_NONE_WORDS = {"", "none", "never"}


def parse_value(name: str, text: str):
    """Convert the string ``text`` to the type of SimConfig field ``name``."""
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    s = text.strip()
    try:
        if name in _INTS:
            v = float(s)
            if not v.is_integer():
                raise ValueError
            return int(v)
        if name in _FLOATS:
            v = float(s)
            if math.isnan(v):
                raise ValueError
            return v
        if name in _BOOLS:
            low = s.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if name == "sync_period" or name == "hop_budget_max":
            if s.lower() in _NONE_WORDS:
                return None
            v = float(s)
            if not v.is_integer():
                raise ValueError
            return int(v)
        if name == "frozen_q":
            return None if s.lower() in _NONE_WORDS else float(s)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None
    return s


def format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _apply(config: SimConfig, pairs: Iterable[tuple[str, str]]) -> SimConfig:
    changes = {}
    strategy = None
    for key, text in pairs:
        key = key.strip()
        if key == "strategy":
            strategy = text.strip()
            continue
        changes[key] = parse_value(key, text)
    config = config.replace(**changes)
    if strategy is not None:
        config = config.with_strategy(strategy)
    return config


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    """Parse INI text on top of ``base`` (the reference setup by default)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from None
    pairs = []
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        allowed = SECTIONS[section] + (("strategy",) if section == "strategy" else ())
        for key, value in cp.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            pairs.append((key, value))
    return _apply(base or SimConfig(), pairs).validate()


def load_config(path: str | Path) -> SimConfig:
    """Read a config file; relative data paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    cfg = parse_config(text)
    changes = {}
    for key in ("topology_file", "trace_file"):
        value = getattr(cfg, key)
        if value and not Path(value).is_absolute():
            changes[key] = str(path.parent / value)
    return cfg.replace(**changes) if changes else cfg


def dump_config(config: SimConfig) -> str:
    """Serialise every field; ``parse_config(dump_config(c)) == c``."""
    cp = configparser.ConfigParser(interpolation=None)
    for section, keys in SECTIONS.items():
        cp[section] = {k: format_value(getattr(config, k)) for k in keys}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def apply_overrides(config: SimConfig, overrides: Iterable[str]) -> SimConfig:
    """Apply ``key=value`` strings, e.g. from repeated ``--override`` flags."""
    pairs = []
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override must look like key=value, got {item!r}")
        pairs.append((key, value))
    return _apply(config, pairs).validate()
