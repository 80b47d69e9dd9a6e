"""Append-only context history and assertion-level diffs between snapshots."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .kb import Assertion, Snapshot, Vocabulary, fingerprint, load_snapshot


class HistoryError(Exception):
    pass


@dataclass(frozen=True)
class HistoryEntry:
    timestamp: int
    snapshot: Snapshot
    fingerprint: str


@dataclass(frozen=True)
class History:
    entries: tuple[HistoryEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def snapshots(self) -> list[Snapshot]:
        return [e.snapshot for e in self.entries]

    def until(self, timestamp: int) -> History:
        """Prefix of entries with timestamp <= ``timestamp``."""
        return History(tuple(e for e in self.entries if e.timestamp <= timestamp))

    def by_id(self, snapshot_id: str) -> HistoryEntry | None:
        for e in self.entries:
            if e.snapshot.id == snapshot_id:
                return e
        return None


def append(h: History, s: Snapshot) -> History:
    """Return ``h`` extended by ``s``; ``h`` itself is left untouched."""
    if h.entries and s.timestamp <= h.entries[-1].timestamp:
        raise HistoryError(
            f"non-monotonic timestamp: {s.id}@{s.timestamp} after "
            f"{h.entries[-1].snapshot.id}@{h.entries[-1].timestamp}"
        )
    return History(h.entries + (HistoryEntry(s.timestamp, s, fingerprint(s)),))


def from_snapshots(snapshots) -> History:
    h = History()
    for s in snapshots:
        h = append(h, s)
    return h


def load_manifest(path) -> History:
    """Build a history from a manifest: one snapshot-file path per line.

    Relative paths resolve against the manifest's directory. Blank lines and
    ``#`` comments are skipped.
    """
    base = os.path.dirname(os.path.abspath(path))
    h = History()
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            h = append(h, load_snapshot(os.path.join(base, line)))
    return h


@dataclass(frozen=True)
class ContextDiff:
    added_assertions: frozenset[Assertion] = frozenset()
    removed_assertions: frozenset[Assertion] = frozenset()
    added_vocab: Vocabulary = field(default_factory=Vocabulary)
    removed_vocab: Vocabulary = field(default_factory=Vocabulary)

    def is_empty(self) -> bool:
        return not (
            self.added_assertions
            or self.removed_assertions
            or not self.added_vocab.is_empty()
            or not self.removed_vocab.is_empty()
        )

    def lines(self) -> list[str]:
        """``-``/``+`` prefixed statement lines, removals first, each group sorted."""
        removed = self.removed_vocab.lines() + [a.line() for a in self.removed_assertions]
        added = self.added_vocab.lines() + [a.line() for a in self.added_assertions]
        return [f"- {x}" for x in sorted(removed)] + [f"+ {x}" for x in sorted(added)]


def diff(older: Snapshot, newer: Snapshot) -> ContextDiff:
    return ContextDiff(
        added_assertions=newer.abox - older.abox,
        removed_assertions=older.abox - newer.abox,
        added_vocab=newer.vocabulary.difference(older.vocabulary),
        removed_vocab=older.vocabulary.difference(newer.vocabulary),
    )


def apply_diff(d: ContextDiff, s: Snapshot, *, id: str | None = None, timestamp: int | None = None) -> Snapshot:
    """Patch ``s`` with ``d``: drop removed items, then add added ones."""
    vocab = s.vocabulary.difference(d.removed_vocab).union(d.added_vocab)
    abox = (s.abox - d.removed_assertions) | d.added_assertions
    return Snapshot(
        s.id if id is None else id,
        s.timestamp if timestamp is None else timestamp,
        vocab,
        abox,
    )


@dataclass(frozen=True)
class ChangeEvent:
    at: int
    diff: ContextDiff
    snapshot_id: str = ""


def change_events(h: History) -> list[ChangeEvent]:
    events = []
    for prev, cur in zip(h.entries, h.entries[1:]):
        if prev.fingerprint == cur.fingerprint:
            continue
        events.append(ChangeEvent(cur.timestamp, diff(prev.snapshot, cur.snapshot), cur.snapshot.id))
    return events
