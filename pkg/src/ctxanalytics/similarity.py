"""Weighted Jaccard similarity between snapshots and nearest-context search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .history import History
from .kb import Snapshot


@dataclass(frozen=True)
class SimilarityConfig:
    w_a: float = 0.8
    w_v: float = 0.2

    def __post_init__(self):
        if self.w_a < 0 or self.w_v < 0:
            raise ValueError("similarity weights must be non-negative")
        if not math.isclose(self.w_a + self.w_v, 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ValueError(f"similarity weights must sum to 1, got {self.w_a} + {self.w_v}")


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    abox_jaccard: float
    vocab_jaccard: float


def jaccard(a: frozenset | set, b: frozenset | set) -> float:
    """|a & b| / |a | b|, with two empty sets counted as identical."""
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


def sim(a: Snapshot, b: Snapshot, cfg: SimilarityConfig = SimilarityConfig()) -> SimilarityScore:
    abox = jaccard(a.abox, b.abox)
    vocab = jaccard(frozenset(a.vocabulary.lines()), frozenset(b.vocabulary.lines()))
    value = cfg.w_a * abox + cfg.w_v * vocab
    # weights summing to 1 only up to rounding can push identical contexts past 1
    value = min(1.0, max(0.0, value))
    if abox == 1.0 and vocab == 1.0:
        value = 1.0
    return SimilarityScore(value, abox, vocab)


SimilarityFn = Callable[[Snapshot, Snapshot, SimilarityConfig], SimilarityScore]


def nearest(
    h: History,
    q: Snapshot,
    cfg: SimilarityConfig = SimilarityConfig(),
    measure: SimilarityFn = sim,
) -> tuple[int, SimilarityScore]:
    """Index and score of the history entry most similar to ``q``.

    Ties go to the entry with the latest timestamp.
    """
    if len(h) == 0:
        raise ValueError("nearest() on an empty history")
    best_i, best = 0, None
    for i, entry in enumerate(h.entries):
        score = measure(entry.snapshot, q, cfg)
        if best is None or score.value > best.value or (
            score.value == best.value and entry.timestamp > h.entries[best_i].timestamp
        ):
            best_i, best = i, score
    return best_i, best
