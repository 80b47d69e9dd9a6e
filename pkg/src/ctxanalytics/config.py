"""Flat ``key=value`` configuration covering every tunable default."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    # similarity
    wa: float = 0.8
    wv: float = 0.2
    # registry
    tau: float = 0.9
    # drift
    ddm_warmup: int = 30
    ddm_warning: float = 2.0
    ddm_drift: float = 3.0
    window: int = 100
    alpha: float = 0.01
    lookback: int = 200
    # replay
    train_size: int = 200
    holdout_fraction: float = 0.2
    monitor_size: int = 100
    model_kind: str = "stump"
    # scenario
    segments: str = "Robo1:500,Robo2:500"
    theta: float = 0.4
    noise: float = 0.05
    seed: int = 42

    def replace(self, **changes) -> Config:
        return dataclasses.replace(self, **changes)

    def dumps(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in dataclasses.fields(self))


_FIELDS = {f.name: f for f in dataclasses.fields(Config)}


def _coerce(key: str, value: str):
    kind = _FIELDS[key].type
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None
    return value


def parse_assignments(pairs, base: Config | None = None) -> Config:
    """Apply ``key=value`` strings on top of ``base`` (defaults if None)."""
    changes = {}
    for lineno, raw in enumerate(pairs, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        changes[key] = _coerce(key, value)
    return (base or Config()).replace(**changes)


def load_config(path, base: Config | None = None) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_assignments(fh.read().splitlines(), base)
