import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxanalytics.drift import (
    DRIFT,
    WARNING,
    CompletenessVerdict,
    DdmDetector,
    DriftAlarm,
    TwoWindowTest,
    halves_test,
    run_detector,
    two_proportion_z,
    verify_completeness,
    write_alarm_log,
)
from ctxanalytics.history import ChangeEvent, ContextDiff
from ctxanalytics.scenario import SplitMix64


def bernoulli(seed, rates):
    rng = SplitMix64(seed)
    return [rng.random() < r for r in rates]


def ddm_oracle(stream, warmup=30):
    """Straight transcription of the DDM rules, recomputing p from the raw segment."""
    alarms, segment = [], []
    best = None  # (p + s, p, s)
    warned = False
    for i, e in enumerate(stream):
        segment.append(e)
        n = len(segment)
        p = sum(segment) / n
        s = math.sqrt(p * (1 - p) / n)
        if n < warmup or s == 0:
            continue
        if best is None or p + s < best[0]:
            best = (p + s, p, s)
        _, pm, sm = best
        if p + s >= pm + 3 * sm:
            alarms.append((i, DRIFT))
            segment, best, warned = [], None, False
        elif p + s >= pm + 2 * sm:
            if not warned:
                alarms.append((i, WARNING))
            warned = True
        else:
            warned = False
    return alarms


def test_ddm_all_correct_never_alarms():
    d = DdmDetector()
    assert run_detector(d, [False] * 1000) == []
    assert d.p == 0.0


def test_ddm_detects_rate_jump_and_matches_oracle():
    stream = bernoulli(7, [0.05] * 500 + [0.6] * 500)
    alarms = run_detector(DdmDetector(), stream)
    assert [(a.at, a.kind) for a in alarms] == ddm_oracle(stream)
    drifts = [a.at for a in alarms if a.kind == DRIFT]
    assert any(500 < at < 1000 for at in drifts)


@settings(max_examples=100)
@given(st.lists(st.booleans(), max_size=300), st.integers(0, 10**6))
def test_ddm_matches_oracle_on_arbitrary_streams(stream, seed):
    stream = stream + bernoulli(seed, [0.3] * 100)
    got = [(a.at, a.kind) for a in run_detector(DdmDetector(), stream)]
    assert got == ddm_oracle(stream)


@settings(max_examples=100)
@given(st.lists(st.booleans(), min_size=1, max_size=400))
def test_ddm_minima_track_lowest_level_since_reset(stream):
    d = DdmDetector()
    levels = []
    for e in stream:
        alarm = d.update(e)
        if alarm is not None and alarm.kind == DRIFT:
            levels = []
            continue
        if d.n >= d.warmup and d.s > 0:
            levels.append(d.p + d.s)
        if levels:
            assert d.p_min + d.s_min == pytest.approx(min(levels))
        else:
            assert d.p_min == math.inf


@settings(max_examples=100)
@given(st.lists(st.booleans(), max_size=400))
def test_no_alarm_before_warmup(stream):
    ddm = run_detector(DdmDetector(), stream[:29])
    win = run_detector(TwoWindowTest(100), stream[:199])
    assert ddm == [] and win == []


@settings(max_examples=50)
@given(st.lists(st.booleans(), max_size=600))
def test_detectors_are_deterministic(stream):
    assert run_detector(DdmDetector(), stream) == run_detector(DdmDetector(), stream)
    assert run_detector(TwoWindowTest(50), stream) == run_detector(TwoWindowTest(50), stream)


def test_ddm_false_alarm_rate_at_half():
    runs = sum(
        any(a.kind == DRIFT for a in run_detector(DdmDetector(), bernoulli(seed, [0.5] * 2000)))
        for seed in range(50)
    )
    assert runs / 50 <= 0.05, f"{runs}/50 runs raised a drift alarm"


def test_z_degenerate_is_none():
    assert two_proportion_z(0, 100, 0, 100) is None
    assert two_proportion_z(100, 100, 100, 100) is None
    assert run_detector(TwoWindowTest(100), [False] * 400) == []


def test_z_hand_checked():
    # pooled p = 0.25: z = (0 - 0.5) / sqrt(0.25 * 0.75 * (2/100))
    z = two_proportion_z(50, 100, 0, 100)
    assert z == pytest.approx(-0.5 / math.sqrt(0.1875 * 0.02))
    assert abs(z) == pytest.approx(8.164966, abs=1e-6)


def test_window_alarm_and_reference_swap():
    t = TwoWindowTest(100, 0.01)
    ref = [i % 2 == 0 for i in range(100)]
    alarms = run_detector(t, ref + [False] * 100)
    assert len(alarms) == 1
    assert alarms[0].at == 199 and abs(alarms[0].statistic) > 2.576
    assert list(t.reference) == [False] * 100 and len(t.current) == 0


def test_window_needs_full_current():
    assert run_detector(TwoWindowTest(100), [True] * 100 + [False] * 50) == []


def test_window_sizes_are_bounded():
    t = TwoWindowTest(10)
    for e in bernoulli(3, [0.2] * 300):
        t.update(e)
        assert len(t.reference) <= 10 and len(t.current) <= 10


def test_halves_test():
    assert halves_test([True, False] * 100) is None
    assert halves_test([True] * 100 + [False] * 100) is not None


def _event(at):
    return ChangeEvent(at, ContextDiff())


def test_completeness_empty():
    v = verify_completeness([], [], [])
    assert v.sufficient and v.label == "ContextSufficient"


def test_completeness_covered_and_uncovered():
    stream_map = list(range(1000))
    alarm = DriftAlarm(540, DRIFT, 3.2, "ddm")
    assert verify_completeness([alarm], [_event(500)], stream_map, 200).sufficient
    v = verify_completeness([alarm], [], stream_map, 200)
    assert not v.sufficient and v.alarm == alarm and v.label == "ContextIncomplete"
    # warnings never need cover
    assert verify_completeness([DriftAlarm(10, WARNING, 2.1, "ddm")], [], stream_map).sufficient
    # change after the alarm does not cover it
    assert not verify_completeness([alarm], [_event(600)], stream_map).sufficient


def test_completeness_cites_first_uncovered():
    a1, a2 = DriftAlarm(100, DRIFT, 3, "ddm"), DriftAlarm(900, DRIFT, 3, "window")
    v = verify_completeness([a1, a2], [_event(850)], list(range(1000)), 200)
    assert v.alarm == a1


@settings(max_examples=100)
@given(
    st.lists(st.integers(0, 999), max_size=5),
    st.lists(st.integers(0, 999), max_size=5),
    st.integers(0, 300),
    st.integers(0, 300),
)
def test_completeness_monotone_in_lookback(alarm_at, change_at, w1, w2):
    lo, hi = sorted((w1, w2))
    alarms = [DriftAlarm(a, DRIFT, 3.0, "ddm") for a in sorted(alarm_at)]
    changes = [_event(c) for c in sorted(change_at)]
    stream_map = list(range(1000))
    if verify_completeness(alarms, changes, stream_map, lo).sufficient:
        assert verify_completeness(alarms, changes, stream_map, hi).sufficient


def test_alarm_log(tmp_path):
    p = tmp_path / "alarms.csv"
    write_alarm_log(p, [DriftAlarm(5, DRIFT, 8.164966, "window")])
    assert p.read_text() == "index,detector,kind,statistic\n5,window,drift,8.164966\n"
