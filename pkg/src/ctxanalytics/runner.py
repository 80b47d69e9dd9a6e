"""End-to-end replay of a labelled stream against a context history.

Each sample is handled in order:

1. Context bookkeeping. When the sample's snapshot id differs from the
   previous one the registry selects a model for the new context. Exact and
   similar matches take effect immediately. On a miss the previously active
   model keeps predicting while the first ``train_size`` samples of the new
   context are buffered; the buffer is then split chronologically (last
   ``holdout_fraction`` held out), a model is trained and bound to the
   context fingerprint. A context change before the buffer fills trains on
   whatever was buffered.
2. Drift monitoring. A context-blind monitor model is trained on the first
   ``monitor_size`` samples; its prediction errors feed both detectors. A
   drift alarm from either detector retires the monitor: both detectors are
   replaced and a new monitor is trained on the next ``monitor_size``
   samples. Keeping the monitor blind to context lets drift alarms serve as
   independent evidence when checking the context history for completeness.

The result is a plain JSON-serialisable dict (the run report).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .analytics import Dataset, Model, Sample, StreamRow, evaluate, train
from .config import Config
from .drift import DRIFT, WARNING, DdmDetector, TwoWindowTest, verify_completeness
from .history import History, change_events
from .registry import Registry, RegistryConfig, bind, select
from .similarity import SimilarityConfig


class RunError(Exception):
    """Input problem that stops a replay (unknown context, bad ordering, ...)."""


@dataclass
class _PendingTraining:
    snapshot_id: str
    fingerprint: str
    samples: list[Sample] = field(default_factory=list)


def _fresh_detectors(cfg: Config):
    return (
        DdmDetector(cfg.ddm_warmup, cfg.ddm_warning, cfg.ddm_drift),
        TwoWindowTest(cfg.window, cfg.alpha),
    )


def _r6(x: float | None) -> float | None:
    return None if x is None else round(float(x), 6)


def _model_dict(m: Model) -> dict:
    if m.kind == "majority":
        return {"kind": m.kind, "label": m.label}
    return {
        "kind": m.kind,
        "feature_index": m.feature_index,
        "threshold": m.threshold if abs(m.threshold) != float("inf") else str(m.threshold),
        "polarity": m.polarity,
    }


def replay(
    history: History,
    rows: Sequence[StreamRow],
    cfg: Config = Config(),
    on_unknown: str = "error",
) -> tuple[dict, Registry]:
    """Replay ``rows``; returns the run report and the final registry.

    ``on_unknown="hold"`` keeps the last known context when a row names a
    snapshot the history does not contain (the knowledge base never saw that
    change); the default raises :class:`RunError`.
    """
    if on_unknown not in ("error", "hold"):
        raise ValueError(f"on_unknown must be 'error' or 'hold', got {on_unknown!r}")
    simcfg = SimilarityConfig(cfg.wa, cfg.wv)
    regcfg = RegistryConfig(cfg.tau)

    reg = Registry()
    current_id: str | None = None
    active: Model | None = None
    active_kind: str | None = None
    pending: _PendingTraining | None = None

    monitor: Model | None = None
    monitor_buf: list[Sample] = []
    ddm, window = _fresh_detectors(cfg)

    log: list[dict] = []
    selections: list[dict] = []
    trainings: list[dict] = []
    monitor_retrains: list[int] = []
    drift_alarms = []
    hits: dict[str, list[int]] = {}
    dim = len(rows[0].x) if rows else 0

    def finish_training(p: _PendingTraining, index: int, t: int) -> Model:
        nonlocal reg
        ds = Dataset(p.samples)
        fit, hold = ds.split(cfg.holdout_fraction)
        if len(fit) == 0:
            fit = ds
        model = train(fit, cfg.model_kind)
        perf = evaluate(model, hold if len(hold) else fit)
        reg = bind(reg, p.fingerprint, model, perf, t)
        trainings.append(
            {
                "index": index,
                "snapshot_id": p.snapshot_id,
                "fingerprint": p.fingerprint,
                "n_train": len(fit),
                "n_holdout": len(hold),
                "performance": _r6(perf),
                "model": _model_dict(model),
            }
        )
        return model

    prev_t = None
    for i, row in enumerate(rows):
        if len(row.x) != dim:
            raise RunError(f"row {i}: expected {dim} features, got {len(row.x)}")
        if prev_t is not None and row.t < prev_t:
            raise RunError(f"row {i}: timestamp {row.t} goes backwards (previous {prev_t})")
        prev_t = row.t
        entry = history.by_id(row.snapshot_id)
        sid = row.snapshot_id
        if entry is None:
            if on_unknown == "error" or current_id is None:
                raise RunError(f"row {i}: unknown snapshot_id {row.snapshot_id!r}")
            sid = current_id
            entry = history.by_id(sid)

        step: dict = {"index": i, "t": row.t, "snapshot_id": sid, "selection": None, "trained": False}

        if sid != current_id:
            if pending is not None:
                finish_training(pending, i - 1, rows[i - 1].t)
                log[-1]["trained"] = True
                pending = None
            choice = select(reg, history.until(entry.timestamp), entry.snapshot, regcfg, simcfg)
            selections.append(
                {
                    "index": i,
                    "snapshot_id": sid,
                    "fingerprint": entry.fingerprint,
                    "kind": choice.kind,
                    "score": _r6(choice.score.value) if choice.score else None,
                    "record_fingerprint": choice.record.fingerprint if choice.record else None,
                    "record_trained_at": choice.record.trained_at if choice.record else None,
                }
            )
            step["selection"] = choice.kind
            if choice.record is not None:
                active = choice.record.model
            else:
                pending = _PendingTraining(sid, entry.fingerprint)
            active_kind = choice.kind
            current_id = sid

        prediction = active.predict(row.x) if active is not None else None
        step["choice"] = active_kind
        step["prediction"] = prediction
        step["truth"] = row.label
        if prediction is not None:
            hits.setdefault(sid, []).append(int(prediction == row.label))

        sample = Sample(row.x, row.label)
        if pending is not None:
            pending.samples.append(sample)
            if len(pending.samples) >= cfg.train_size:
                active = finish_training(pending, i, row.t)
                step["trained"] = True
                pending = None

        alarms = []
        if monitor is None:
            monitor_buf.append(sample)
            if len(monitor_buf) >= cfg.monitor_size:
                monitor = train(Dataset(monitor_buf), cfg.model_kind)
                monitor_buf = []
                ddm, window = _fresh_detectors(cfg)
                monitor_retrains.append(i)
        else:
            error = monitor.predict(row.x) != row.label
            for det in (ddm, window):
                alarm = det.update(error, i)
                if alarm is not None:
                    alarms.append(alarm)
            if any(a.kind == DRIFT for a in alarms):
                drift_alarms.extend(a for a in alarms if a.kind == DRIFT)
                monitor = None
        step["alarms"] = [
            {"detector": a.detector, "kind": a.kind, "statistic": _r6(a.statistic)} for a in alarms
        ]
        log.append(step)

    if pending is not None:
        finish_training(pending, len(rows) - 1, rows[-1].t)
        log[-1]["trained"] = True

    verdict = verify_completeness(
        drift_alarms, change_events(history), [r.t for r in rows], cfg.lookback
    )
    kinds = [s["kind"] for s in selections]
    all_alarms = [a for step in log for a in step["alarms"]]
    summary = {
        "samples": len(log),
        "exact": kinds.count("exact"),
        "similar": kinds.count("similar"),
        "miss": kinds.count("miss"),
        "trainings": len(trainings),
        "monitor_retrains": len(monitor_retrains),
        "warning_alarms": sum(a["kind"] == WARNING for a in all_alarms),
        "drift_alarms": sum(a["kind"] == DRIFT for a in all_alarms),
        "verdict": verdict.label,
        "uncovered_alarm": None
        if verdict.alarm is None
        else {
            "index": verdict.alarm.at,
            "detector": verdict.alarm.detector,
            "statistic": _r6(verdict.alarm.statistic),
        },
        "lookback": cfg.lookback,
        "per_context_accuracy": {
            sid: _r6(sum(v) / len(v)) for sid, v in sorted(hits.items())
        },
    }
    report = {
        "config": {k: v for k, v in sorted(vars(cfg).items())},
        "log": log,
        "selections": selections,
        "trainings": trainings,
        "monitor_retrains": monitor_retrains,
        "summary": summary,
    }
    return report, reg


def run(history: History, rows: Sequence[StreamRow], cfg: Config = Config(), on_unknown: str = "error") -> dict:
    return replay(history, rows, cfg, on_unknown)[0]


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def check_integrity(report: dict) -> list[str]:
    """Cross-check the summary against the per-step log; returns problems found."""
    problems = []
    try:
        log = report["log"]
        summary = report["summary"]
        selections = report.get("selections", [])
        trainings = report.get("trainings", [])
    except (KeyError, TypeError) as exc:
        return [f"malformed report: missing {exc}"]
    if [s.get("index") for s in log] != list(range(len(log))):
        problems.append("log indices are not 0..n-1")
    tallies = {
        "samples": len(log),
        "exact": sum(s.get("selection") == "exact" for s in log),
        "similar": sum(s.get("selection") == "similar" for s in log),
        "miss": sum(s.get("selection") == "miss" for s in log),
        "trainings": sum(bool(s.get("trained")) for s in log),
        "warning_alarms": sum(a["kind"] == WARNING for s in log for a in s.get("alarms", [])),
        "drift_alarms": sum(a["kind"] == DRIFT for s in log for a in s.get("alarms", [])),
    }
    for key, value in tallies.items():
        if summary.get(key) != value:
            problems.append(f"summary {key}={summary.get(key)} but log tallies {value}")
    if summary.get("trainings") != summary.get("miss"):
        problems.append(f"trainings={summary.get('trainings')} differs from miss={summary.get('miss')}")
    if len(selections) != tallies["exact"] + tallies["similar"] + tallies["miss"]:
        problems.append("selection list does not match log selections")
    if len(trainings) != tallies["trainings"]:
        problems.append("training list does not match log trainings")
    return problems
