"""Context-to-model registry: bind models to fingerprints, select for a context."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

from .analytics import Model, format_params, parse_params
from .history import History
from .kb import Snapshot, fingerprint
from .similarity import SimilarityConfig, SimilarityScore, nearest


class RegistryError(Exception):
    pass


@dataclass(frozen=True)
class ModelRecord:
    fingerprint: str
    model: Model
    performance: float
    trained_at: int


@dataclass(frozen=True)
class RegistryConfig:
    tau: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")


@dataclass(frozen=True)
class ModelChoice:
    """Outcome of :func:`select`: ``kind`` is "exact", "similar" or "miss"."""

    kind: str
    record: Optional[ModelRecord] = None
    score: Optional[SimilarityScore] = None
    history_index: Optional[int] = None


@dataclass(frozen=True)
class Registry:
    records: Mapping[str, ModelRecord] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "records", MappingProxyType(dict(self.records)))

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, fp: str) -> bool:
        return fp in self.records

    def lookup(self, fp: str) -> ModelRecord | None:
        return self.records.get(fp)


def bind(reg: Registry, fp: str, m: Model, perf: float, at: int) -> Registry:
    """Return a registry mapping ``fp`` to the better of its old and new record.

    Higher performance wins; equal performance goes to the later ``trained_at``.
    """
    if not 0.0 <= perf <= 1.0:
        raise RegistryError(f"performance must lie in [0, 1], got {perf}")
    new = ModelRecord(fp, m, perf, at)
    old = reg.records.get(fp)
    if old is not None and (old.performance, old.trained_at) > (new.performance, new.trained_at):
        return reg
    records = dict(reg.records)
    records[fp] = new
    return Registry(records)


def select(
    reg: Registry,
    h: History,
    current: Snapshot,
    cfg: RegistryConfig = RegistryConfig(),
    simcfg: SimilarityConfig = SimilarityConfig(),
) -> ModelChoice:
    fp = fingerprint(current)
    record = reg.lookup(fp)
    if record is not None:
        return ModelChoice("exact", record)
    candidates = History(tuple(e for e in h.entries if e.fingerprint in reg))
    if len(candidates) == 0:
        return ModelChoice("miss")
    idx, score = nearest(candidates, current, simcfg)
    if score.value >= cfg.tau:
        entry = candidates[idx]
        return ModelChoice(
            "similar", reg.records[entry.fingerprint], score, h.entries.index(entry)
        )
    return ModelChoice("miss", score=score)


def dumps(reg: Registry) -> str:
    lines = []
    for fp in sorted(reg.records):
        r = reg.records[fp]
        lines.append(f"{fp} {r.model.kind} {format_params(r.model)} {r.performance!r} {r.trained_at}")
    return "".join(line + "\n" for line in lines)


def loads(text: str) -> Registry:
    records = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 5:
            raise RegistryError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        fp, kind, params, perf, at = parts
        try:
            rec = ModelRecord(fp, parse_params(kind, params), float(perf), int(at))
        except (KeyError, ValueError) as exc:
            raise RegistryError(f"line {lineno}: {exc}") from None
        records[fp] = rec
    return Registry(records)


def save(reg: Registry, path) -> None:
    """Write the registry file atomically (temp file in the same dir + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".registry-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(reg))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path) -> Registry:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
