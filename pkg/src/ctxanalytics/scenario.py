"""Deterministic welding-robot scenario: context snapshots plus a labelled quality stream.

Random numbers come from SplitMix64 (Steele, Lea & Flood 2014) so that any
implementation can reproduce a stream bit for bit:

    state = (state + 0x9E3779B97F4A7C15) mod 2**64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    return z ^ (z >> 31)

The initial state is the seed (mod 2**64). A uniform double in [0, 1) is
``(next() >> 11) * 2**-53``. Every sample draws exactly two doubles, first the
quality ``x`` and then the flip variate ``u`` (flip iff ``u < noise``); the
flip variate is drawn under both robots so segment order never shifts the
sequence.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .analytics import StreamRow, write_stream_csv
from .kb import ConceptAssertion, RoleAssertion, Snapshot, Vocabulary, serialize

ROBO1, ROBO2 = "Robo1", "Robo2"
_ROBOTS = {ROBO1: "Robo-1", ROBO2: "Robo-2"}
_MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


VOCABULARY = Vocabulary(
    concepts={"Product", "Material", "Process", "Equipment"},
    roles={"madeFrom", "uses", "produces"},
)

# Robo-1 stays registered as Equipment after the swap; only the uses link moves.
_SHARED_ABOX = frozenset(
    {
        ConceptAssertion("Product", "P1"),
        ConceptAssertion("Product", "P2"),
        ConceptAssertion("Material", "M22"),
        ConceptAssertion("Process", "BodyWelding"),
        ConceptAssertion("Equipment", "Robo-1"),
        RoleAssertion("madeFrom", "P1", "M22"),
        RoleAssertion("madeFrom", "P2", "M22"),
        RoleAssertion("produces", "BodyWelding", "P1"),
        RoleAssertion("produces", "BodyWelding", "P2"),
    }
)


def build_snapshot(context_id: str, id: str | None = None, timestamp: int = 0) -> Snapshot:
    """Body-welding context where BodyWelding uses Robo-1 or Robo-2."""
    if context_id not in _ROBOTS:
        raise ValueError(f"unknown context {context_id!r}; expected one of {sorted(_ROBOTS)}")
    abox = _SHARED_ABOX | {RoleAssertion("uses", "BodyWelding", _ROBOTS[context_id])}
    return Snapshot(id or context_id.lower(), timestamp, VOCABULARY, abox)


@dataclass(frozen=True)
class ScenarioConfig:
    segments: tuple[tuple[str, int], ...] = ((ROBO1, 500), (ROBO2, 500))
    theta: float = 0.4
    noise: float = 0.05
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple((c, int(n)) for c, n in self.segments))
        if not self.segments:
            raise ValueError("scenario needs at least one segment")
        for ctx, n in self.segments:
            if ctx not in _ROBOTS:
                raise ValueError(f"unknown context {ctx!r}")
            if n <= 0:
                raise ValueError(f"segment length must be positive, got {n}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if not 0.0 <= self.noise < 0.5:
            raise ValueError("noise must lie in [0, 0.5)")


def parse_segments(text: str) -> tuple[tuple[str, int], ...]:
    """``"Robo1:500,Robo2:500"`` -> ``(("Robo1", 500), ("Robo2", 500))``."""
    out = []
    for part in text.split(","):
        ctx, _, n = part.strip().partition(":")
        out.append((ctx, int(n)))
    return tuple(out)


def format_segments(segments) -> str:
    return ",".join(f"{c}:{n}" for c, n in segments)


@dataclass(frozen=True)
class ScenarioOutput:
    stream: tuple[StreamRow, ...]
    snapshots: tuple[Snapshot, ...]
    truth: tuple[int, ...]
    contexts: tuple[str, ...]


def generate(cfg: ScenarioConfig) -> ScenarioOutput:
    rng = SplitMix64(cfg.seed)
    rows: list[StreamRow] = []
    snapshots: list[Snapshot] = []
    truth: list[int] = []
    for seg, (ctx, length) in enumerate(cfg.segments):
        start = len(rows)
        snap = build_snapshot(ctx, id=f"s{seg}", timestamp=start)
        snapshots.append(snap)
        if seg > 0:
            truth.append(start)
        for i in range(start, start + length):
            x = rng.random()
            flip = rng.random() < cfg.noise
            y = ((x < cfg.theta) != flip) if ctx == ROBO1 else False
            rows.append(StreamRow(i, (x,), y, snap.id))
    return ScenarioOutput(
        tuple(rows), tuple(snapshots), tuple(truth), tuple(c for c, _ in cfg.segments)
    )


def write_scenario(out: ScenarioOutput, directory) -> dict[str, str]:
    """Write snapshot files, a manifest, the stream CSV and the change truth."""
    os.makedirs(os.path.join(directory, "snapshots"), exist_ok=True)
    manifest_lines = []
    for snap in out.snapshots:
        rel = f"snapshots/{snap.id}.ctx"
        with open(os.path.join(directory, rel), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(serialize(snap))
        manifest_lines.append(rel)
    paths = {
        "manifest": os.path.join(directory, "manifest.txt"),
        "stream": os.path.join(directory, "stream.csv"),
        "truth": os.path.join(directory, "truth.txt"),
    }
    with open(paths["manifest"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(line + "\n" for line in manifest_lines))
    write_stream_csv(paths["stream"], out.stream)
    with open(paths["truth"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(f"{p}\n" for p in out.truth))
    return paths
