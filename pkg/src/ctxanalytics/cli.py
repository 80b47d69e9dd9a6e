"""``ctx`` command line: validate, diff, sim, fingerprint, scenario, run, report.

Exit codes: 0 success, 1 validation or integrity failure, 2 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import drift, kb, runner
from .analytics import DatasetError, DimensionMismatchError, read_stream_csv
from .config import Config, ConfigError, load_config, parse_assignments
from .history import HistoryError, diff, load_manifest
from .registry import save as save_registry
from .scenario import ScenarioConfig, generate, parse_segments, write_scenario
from .similarity import SimilarityConfig, sim

EXIT_OK, EXIT_INVALID, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load(path) -> kb.Snapshot:
    try:
        return kb.load_snapshot(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except kb.KBError as exc:
        raise InputError(f"{path}: {exc}") from None


def _config(args) -> Config:
    cfg = Config()
    try:
        if getattr(args, "config", None):
            cfg = load_config(args.config, cfg)
        if getattr(args, "set", None):
            cfg = parse_assignments(args.set, cfg)
    except OSError as exc:
        raise InputError(f"{args.config}: {exc.strerror}") from None
    except ConfigError as exc:
        raise InputError(str(exc)) from None
    return cfg


def cmd_validate(args, out) -> int:
    try:
        with open(args.path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{args.path}: {exc.strerror}") from None
    try:
        snap = kb.parse_snapshot(text)
    except kb.SnapshotSyntaxError as exc:
        raise InputError(f"{args.path}: {exc}") from None
    except (kb.UndeclaredVocabularyError, kb.CyclicSubsumptionError):
        snap = _parse_unchecked(text)
    violations = kb.validate(snap)
    for v in violations:
        print(v, file=out)
    return EXIT_INVALID if violations else EXIT_OK


def _parse_unchecked(text: str) -> kb.Snapshot:
    # Syntax already passed; rebuild without the semantic checks so every violation is listed.
    header, concepts, roles, isa, abox = None, set(), set(), set(), set()
    for raw in text.splitlines():
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        key, rest = tokens[0], tokens[1:]
        if key == "@snapshot":
            header = (rest[0], int(rest[1]))
        elif key == "concept":
            concepts.add(rest[0])
        elif key == "role":
            roles.add(rest[0])
        elif key == "isa":
            isa.add(tuple(rest))
        elif key == "inst":
            abox.add(kb.ConceptAssertion(*rest))
        else:
            abox.add(kb.RoleAssertion(*rest))
    return kb.Snapshot(header[0], header[1], kb.Vocabulary(concepts, roles, isa), abox)


def cmd_fingerprint(args, out) -> int:
    print(kb.fingerprint(_load(args.path)), file=out)
    return EXIT_OK


def cmd_diff(args, out) -> int:
    for line in diff(_load(args.older), _load(args.newer)).lines():
        print(line, file=out)
    return EXIT_OK


def cmd_sim(args, out) -> int:
    try:
        cfg = SimilarityConfig(args.wa, args.wv)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    score = sim(_load(args.a), _load(args.b), cfg)
    print(f"value {score.value:.6f}", file=out)
    print(f"abox_jaccard {score.abox_jaccard:.6f}", file=out)
    print(f"vocab_jaccard {score.vocab_jaccard:.6f}", file=out)
    return EXIT_OK


def cmd_scenario(args, out) -> int:
    cfg = _config(args)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    try:
        scfg = ScenarioConfig(parse_segments(cfg.segments), cfg.theta, cfg.noise, cfg.seed)
    except ValueError as exc:
        raise InputError(f"scenario config: {exc}") from None
    paths = write_scenario(generate(scfg), args.out)
    for key in ("manifest", "stream", "truth"):
        print(f"{key} {paths[key]}", file=out)
    return EXIT_OK


def cmd_run(args, out) -> int:
    cfg = _config(args)
    try:
        history = load_manifest(args.manifest)
        rows = read_stream_csv(args.stream)
    except OSError as exc:
        raise InputError(f"{exc.filename}: {exc.strerror}") from None
    except (kb.KBError, HistoryError, DatasetError, DimensionMismatchError) as exc:
        raise InputError(str(exc)) from None
    try:
        report, registry = runner.replay(history, rows, cfg, on_unknown=args.on_unknown)
    except (runner.RunError, DimensionMismatchError) as exc:
        raise InputError(str(exc)) from None
    text = runner.dumps_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)
    if args.alarms:
        alarms = [
            drift.DriftAlarm(step["index"], a["kind"], a["statistic"], a["detector"])
            for step in report["log"]
            for a in step["alarms"]
        ]
        drift.write_alarm_log(args.alarms, alarms)
    if args.registry:
        save_registry(registry, args.registry)
    if args.out:
        s = report["summary"]
        print(
            f"{s['samples']} samples, exact={s['exact']} similar={s['similar']} miss={s['miss']}, "
            f"trainings={s['trainings']}, drift alarms={s['drift_alarms']}, {s['verdict']}",
            file=out,
        )
    return EXIT_OK


def format_report(report: dict) -> tuple[str, str]:
    """Human-readable summary text and a ``metric,value`` CSV."""
    s = report["summary"]
    lines = [
        f"samples: {s['samples']}",
        f"selections: exact={s['exact']} similar={s['similar']} miss={s['miss']}",
        f"trainings: {s['trainings']}",
        f"monitor retrains: {s['monitor_retrains']}",
        f"alarms: warning={s['warning_alarms']} drift={s['drift_alarms']}",
        f"verdict: {s['verdict']} (lookback {s['lookback']})",
    ]
    if s.get("uncovered_alarm"):
        a = s["uncovered_alarm"]
        lines.append(f"uncovered drift alarm: index {a['index']} detector {a['detector']} statistic {a['statistic']:.6f}")
    for sel in report.get("selections", []):
        if sel["kind"] == "exact":
            lines.append(
                f"Exact reuse at index {sel['index']}: {sel['snapshot_id']} -> model for "
                f"{sel['record_fingerprint']} (trained at {sel['record_trained_at']})"
            )
        elif sel["kind"] == "similar":
            lines.append(
                f"Similar reuse at index {sel['index']}: {sel['snapshot_id']} -> model for "
                f"{sel['record_fingerprint']} (score {sel['score']:.6f})"
            )
    for sid, acc in s.get("per_context_accuracy", {}).items():
        lines.append(f"accuracy {sid}: {acc:.6f}")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    for key in ("samples", "exact", "similar", "miss", "trainings", "monitor_retrains", "warning_alarms", "drift_alarms", "verdict"):
        w.writerow([key, s[key]])
    for sid, acc in s.get("per_context_accuracy", {}).items():
        w.writerow([f"accuracy:{sid}", f"{acc:.6f}"])
    return "\n".join(lines) + "\n", buf.getvalue()


def cmd_report(args, out) -> int:
    try:
        with open(args.path, encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as exc:
        raise InputError(f"{args.path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.path}: not a run report ({exc})") from None
    problems = runner.check_integrity(report)
    if problems:
        for p in problems:
            print(f"integrity error: {p}", file=sys.stderr)
        return EXIT_INVALID
    text, table = format_report(report)
    out.write(text)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table)
    else:
        out.write("\n" + table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctx", description="Context-aware analytic model management.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a snapshot file")
    v.add_argument("path")
    v.set_defaults(func=cmd_validate)

    f = sub.add_parser("fingerprint", help="print a snapshot's content fingerprint")
    f.add_argument("path")
    f.set_defaults(func=cmd_fingerprint)

    d = sub.add_parser("diff", help="assertion-level diff between two snapshots")
    d.add_argument("older")
    d.add_argument("newer")
    d.set_defaults(func=cmd_diff)

    s = sub.add_parser("sim", help="similarity between two snapshots")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--wa", type=float, default=0.8)
    s.add_argument("--wv", type=float, default=0.2)
    s.set_defaults(func=cmd_sim)

    def add_config(sp):
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    sc = sub.add_parser("scenario", help="generate the welding-robot scenario")
    add_config(sc)
    sc.add_argument("--seed", type=int)
    sc.add_argument("--out", required=True)
    sc.set_defaults(func=cmd_scenario)

    r = sub.add_parser("run", help="replay a stream against a context history")
    r.add_argument("manifest")
    r.add_argument("stream")
    add_config(r)
    r.add_argument("--out", help="write the JSON run report here (default: stdout)")
    r.add_argument("--alarms", help="write the alarm log CSV here")
    r.add_argument("--registry", help="write the final model registry here")
    r.add_argument("--on-unknown", choices=("error", "hold"), default="error")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("report", help="summarise a run report")
    rp.add_argument("path")
    rp.add_argument("--csv", help="write the CSV summary here instead of stdout")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
