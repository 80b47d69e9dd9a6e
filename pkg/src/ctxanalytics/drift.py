"""Streaming drift detectors over a model's error stream, and the completeness check.

Two detectors share one alarm type:

* :class:`DdmDetector` tracks the running error rate ``p`` and its standard
  error ``s`` and compares ``p + s`` against the lowest ``p_min + s_min``
  seen since the last reset (2 sigma: warning, 3 sigma: drift).
* :class:`TwoWindowTest` compares a fixed reference window against a sliding
  current window with a pooled two-proportion z-test.

A drift alarm that no context change explains means the context knowledge
base is missing something (:func:`verify_completeness`).
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Sequence

STABLE, WARNING, DRIFT = "stable", "warning", "drift"


@dataclass(frozen=True)
class DriftAlarm:
    at: int
    kind: str
    statistic: float
    detector: str


class DdmDetector:
    """Error-rate monitor in the style of Gama et al.'s DDM.

    Minima are tracked, and states evaluated, only once ``warmup`` samples
    have been seen and the standard error is non-zero (an error rate of 0 or 1
    carries no variance information).
    """

    name = "ddm"

    def __init__(self, warmup: int = 30, warning_level: float = 2.0, drift_level: float = 3.0):
        self.warmup = warmup
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.index = -1
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.error_sum = 0
        self.p_min = math.inf
        self.s_min = math.inf
        self.state = STABLE

    @property
    def p(self) -> float:
        return self.error_sum / self.n if self.n else 0.0

    @property
    def s(self) -> float:
        return math.sqrt(self.p * (1 - self.p) / self.n) if self.n else 0.0

    def update(self, error: bool, index: int | None = None) -> DriftAlarm | None:
        self.index = self.index + 1 if index is None else index
        self.n += 1
        self.error_sum += bool(error)
        if self.n < self.warmup:
            return None
        p, s = self.p, self.s
        if s == 0.0:
            return None
        if p + s < self.p_min + self.s_min:
            self.p_min, self.s_min = p, s
        level = p + s
        if level >= self.p_min + self.drift_level * self.s_min:
            alarm = DriftAlarm(self.index, DRIFT, (level - self.p_min) / self.s_min, self.name)
            self.reset()
            return alarm
        if level >= self.p_min + self.warning_level * self.s_min:
            entering = self.state != WARNING
            self.state = WARNING
            if entering:
                return DriftAlarm(self.index, WARNING, (level - self.p_min) / self.s_min, self.name)
            return None
        self.state = STABLE
        return None


def two_proportion_z(ref_errors: int, ref_n: int, cur_errors: int, cur_n: int) -> float | None:
    """Pooled two-proportion z statistic (current minus reference); None if degenerate."""
    pooled = (ref_errors + cur_errors) / (ref_n + cur_n)
    if pooled <= 0.0 or pooled >= 1.0:
        return None
    se = math.sqrt(pooled * (1 - pooled) * (1 / ref_n + 1 / cur_n))
    return (cur_errors / cur_n - ref_errors / ref_n) / se


class TwoWindowTest:
    """Fixed reference window vs. sliding current window, both of size ``w``.

    The reference fills first and then stays put. Once the current window is
    full it slides by one sample per update and the z-test runs on every
    update. On a drift alarm the current window becomes the new reference and
    the current window starts empty.
    """

    name = "window"

    def __init__(self, w: int = 100, alpha: float = 0.01):
        if w < 1:
            raise ValueError("window size must be positive")
        self.w = w
        self.alpha = alpha
        self.critical = NormalDist().inv_cdf(1 - alpha / 2)
        self.index = -1
        self.reset()

    def reset(self) -> None:
        self.reference: deque[bool] = deque(maxlen=self.w)
        self.current: deque[bool] = deque(maxlen=self.w)
        self._ref_errors = 0
        self._cur_errors = 0

    def update(self, error: bool, index: int | None = None) -> DriftAlarm | None:
        self.index = self.index + 1 if index is None else index
        error = bool(error)
        if len(self.reference) < self.w:
            self.reference.append(error)
            self._ref_errors += error
            return None
        if len(self.current) == self.w:
            self._cur_errors -= self.current[0]
        self.current.append(error)
        self._cur_errors += error
        if len(self.current) < self.w:
            return None
        z = two_proportion_z(self._ref_errors, self.w, self._cur_errors, self.w)
        if z is None or abs(z) <= self.critical:
            return None
        self.reference = self.current
        self._ref_errors = self._cur_errors
        self.current = deque(maxlen=self.w)
        self._cur_errors = 0
        return DriftAlarm(self.index, DRIFT, z, self.name)


def run_detector(detector, errors: Iterable[bool]) -> list[DriftAlarm]:
    alarms = []
    for e in errors:
        alarm = detector.update(e)
        if alarm is not None:
            alarms.append(alarm)
    return alarms


def halves_test(stream: Sequence[bool], alpha: float = 0.01) -> DriftAlarm | None:
    """Two-window test between the first and second half of ``stream``."""
    half = len(stream) // 2
    if half == 0:
        return None
    test = TwoWindowTest(half, alpha)
    alarm = None
    for e in stream[len(stream) - 2 * half:]:
        alarm = test.update(e) or alarm
    return alarm


@dataclass(frozen=True)
class CompletenessVerdict:
    sufficient: bool
    window_w: int
    alarm: DriftAlarm | None = None

    @property
    def label(self) -> str:
        return "ContextSufficient" if self.sufficient else "ContextIncomplete"


def change_positions(changes, stream_map: Sequence[int]) -> list[int]:
    """Stream position of each change: the first sample whose timestamp is >= the change time."""
    return [bisect_left(stream_map, c.at) for c in changes]


def verify_completeness(
    alarms: Sequence[DriftAlarm],
    changes,
    stream_map: Sequence[int],
    w: int = 200,
) -> CompletenessVerdict:
    """Check every drift alarm for a context change in the ``w`` positions before it.

    ``stream_map[i]`` is the timestamp of stream position ``i`` and must be
    non-decreasing. A change counts as covering an alarm at position ``a`` when
    it lands at a position in ``[a - w, a]``.
    """
    positions = change_positions(changes, stream_map)
    for alarm in alarms:
        if alarm.kind != DRIFT:
            continue
        if not any(alarm.at - w <= pos <= alarm.at for pos in positions):
            return CompletenessVerdict(False, w, alarm)
    return CompletenessVerdict(True, w)


def write_alarm_log(path, alarms: Sequence[DriftAlarm]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["index", "detector", "kind", "statistic"])
        for a in alarms:
            out.writerow([a.at, a.detector, a.kind, f"{a.statistic:.6f}"])
