"""Small transparent learners: majority class and single-feature threshold stump."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


class DatasetError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    x: tuple[float, ...]
    y: bool

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if not self.x:
            raise DatasetError("feature vector must be non-empty")
        if not all(math.isfinite(v) for v in self.x):
            raise DatasetError(f"non-finite feature value in {self.x}")
        object.__setattr__(self, "y", bool(self.y))


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        dims = {len(s.x) for s in self.samples}
        if len(dims) > 1:
            raise DimensionMismatchError(f"mixed feature dimensions {sorted(dims)}")

    @classmethod
    def from_pairs(cls, pairs) -> Dataset:
        return cls(tuple(Sample(x if isinstance(x, (list, tuple)) else (x,), y) for x, y in pairs))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def feature_dim(self) -> int:
        if not self.samples:
            raise DatasetError("empty dataset has no feature dimension")
        return len(self.samples[0].x)

    def split(self, holdout_fraction: float = 0.2) -> tuple[Dataset, Dataset]:
        """Chronological split: the last ``holdout_fraction`` of samples is held out."""
        n_hold = int(len(self.samples) * holdout_fraction)
        cut = len(self.samples) - n_hold
        return Dataset(self.samples[:cut]), Dataset(self.samples[cut:])


@dataclass(frozen=True)
class MajorityClass:
    label: bool
    feature_dim: int
    kind = "majority"

    def predict(self, x: Sequence[float]) -> bool:
        _check_dim(self.feature_dim, x)
        return self.label


@dataclass(frozen=True)
class ThresholdStump:
    """polarity=True: defect iff x[feature_index] < threshold; False inverts."""

    feature_index: int
    threshold: float
    polarity: bool
    feature_dim: int
    kind = "stump"

    def predict(self, x: Sequence[float]) -> bool:
        _check_dim(self.feature_dim, x)
        return (x[self.feature_index] < self.threshold) == self.polarity


Model = Union[MajorityClass, ThresholdStump]


def _check_dim(dim: int, x: Sequence[float]) -> None:
    if len(x) != dim:
        raise DimensionMismatchError(f"expected {dim} features, got {len(x)}")


def _train_majority(d: Dataset) -> MajorityClass:
    positives = sum(s.y for s in d.samples)
    return MajorityClass(positives > len(d) - positives, d.feature_dim)


def _train_stump(d: Dataset) -> ThresholdStump:
    X = np.array([s.x for s in d.samples], dtype=float)
    y = np.array([s.y for s in d.samples], dtype=bool)
    n = len(y)
    total_pos = int(y.sum())
    best: tuple[int, float, bool] | None = None
    best_err = n + 1
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        distinct = np.flatnonzero(np.diff(xs) > 0)
        # candidate k splits the sorted column after position k (k = -1: nothing left)
        cuts = np.concatenate(([-1], distinct, [n - 1]))
        pos_left = np.concatenate(([0], np.cumsum(ys)))[cuts + 1]
        n_left = cuts + 1
        neg_left = n_left - pos_left
        pos_right = total_pos - pos_left
        # polarity True predicts defect on the left of the threshold
        err_true = neg_left + pos_right
        err_false = n - err_true
        thresholds = np.concatenate(
            ([-math.inf], xs[distinct] + (xs[distinct + 1] - xs[distinct]) / 2, [math.inf])
        )
        for k in range(len(cuts)):
            for polarity, err in ((True, err_true[k]), (False, err_false[k])):
                if err < best_err:
                    best_err = int(err)
                    best = (j, float(thresholds[k]), polarity)
    j, thr, pol = best
    return ThresholdStump(j, thr, pol, X.shape[1])


def train(d: Dataset, kind: str = "stump") -> Model:
    """Fit a model of ``kind`` ("majority" or "stump") on ``d``.

    The stump searches every feature, the midpoints between consecutive
    distinct values and the two infinite sentinels, with both polarities, and
    keeps the first minimum-error candidate in (feature, threshold, polarity
    True-before-False) order.
    """
    if len(d) == 0:
        raise DatasetError("cannot train on an empty dataset")
    if kind == "majority":
        return _train_majority(d)
    if kind == "stump":
        return _train_stump(d)
    raise ValueError(f"unknown model kind {kind!r}")


def predict(m: Model, x: Sequence[float]) -> bool:
    return m.predict(x)


def evaluate(m: Model, d: Dataset) -> float:
    if len(d) == 0:
        raise DatasetError("cannot evaluate on an empty dataset")
    correct = sum(m.predict(s.x) == s.y for s in d.samples)
    return correct / len(d)


def training_error(m: Model, d: Dataset) -> int:
    return sum(m.predict(s.x) != s.y for s in d.samples)


def format_params(m: Model) -> str:
    """Single-token parameter string used by the registry file."""
    if isinstance(m, MajorityClass):
        return f"label={int(m.label)};dim={m.feature_dim}"
    return (
        f"feature={m.feature_index};threshold={m.threshold!r};"
        f"polarity={int(m.polarity)};dim={m.feature_dim}"
    )


def parse_params(kind: str, text: str) -> Model:
    fields = dict(part.split("=", 1) for part in text.split(";"))
    if kind == "majority":
        return MajorityClass(fields["label"] == "1", int(fields["dim"]))
    if kind == "stump":
        return ThresholdStump(
            int(fields["feature"]),
            float(fields["threshold"]),
            fields["polarity"] == "1",
            int(fields["dim"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class StreamRow:
    t: int
    x: tuple[float, ...]
    label: bool
    snapshot_id: str


def read_stream_csv(path) -> list[StreamRow]:
    """Read a ``t,x1..xk,label,snapshot_id`` CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        k = len(header) - 3
        expected = ["t"] + [f"x{i}" for i in range(1, k + 1)] + ["label", "snapshot_id"]
        if k < 1 or header != expected:
            raise DatasetError(f"{path}: bad header {header}, expected t,x1..xk,label,snapshot_id")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise DimensionMismatchError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                t = int(rec[0])
                x = tuple(float(v) for v in rec[1 : 1 + k])
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
            if rec[1 + k] not in ("0", "1"):
                raise DatasetError(f"{path}:{lineno}: label must be 0 or 1, got {rec[1 + k]!r}")
            if not all(math.isfinite(v) for v in x):
                raise DatasetError(f"{path}:{lineno}: non-finite feature")
            rows.append(StreamRow(t, x, rec[1 + k] == "1", rec[2 + k]))
    return rows


def write_stream_csv(path, rows: Sequence[StreamRow]) -> None:
    k = len(rows[0].x) if rows else 1
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(1, k + 1)] + ["label", "snapshot_id"])
        for r in rows:
            w.writerow([r.t] + [repr(v) for v in r.x] + [int(r.label), r.snapshot_id])
