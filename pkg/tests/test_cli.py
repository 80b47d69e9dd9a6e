import io
import json

import pytest

from conftest import FIG2_TEXT
from ctxanalytics.cli import main
from ctxanalytics.kb import fingerprint, load_snapshot


def ctx(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def scenario(tmp_path, segments, seed=42, name="sc"):
    d = tmp_path / name
    code, _ = ctx("scenario", "--set", f"segments={segments}", "--seed", seed, "--out", d)
    assert code == 0
    return d


def run(d, *extra, manifest="manifest.txt"):
    report = d / "report.json"
    code, text = ctx("run", d / manifest, d / "stream.csv", "--out", report, *extra)
    return code, text, report


def test_validate_exit_codes(tmp_path):
    ok = tmp_path / "ok.ctx"
    ok.write_text(FIG2_TEXT)
    assert ctx("validate", ok) == (0, "")

    undeclared = tmp_path / "undeclared.ctx"
    undeclared.write_text(FIG2_TEXT.replace("role uses\n", ""))
    code, text = ctx("validate", undeclared)
    assert code == 1 and len(text.splitlines()) == 1 and "uses" in text

    bad = tmp_path / "bad.ctx"
    bad.write_text("@snapshot only-id\n")
    assert ctx("validate", bad)[0] == 2
    assert ctx("validate", tmp_path / "missing.ctx")[0] == 2


def test_fingerprint_diff_sim(tmp_path):
    d = scenario(tmp_path, "Robo1:10,Robo2:10")
    s0, s1 = d / "snapshots" / "s0.ctx", d / "snapshots" / "s1.ctx"
    code, text = ctx("fingerprint", s0)
    assert code == 0 and text.strip() == fingerprint(load_snapshot(s0))

    code, text = ctx("diff", s0, s1)
    assert code == 0
    assert text.splitlines() == ["- rel uses BodyWelding Robo-1", "+ rel uses BodyWelding Robo-2"]

    code, text = ctx("sim", s0, s1)
    assert code == 0
    fields = dict(line.split() for line in text.splitlines())
    assert fields == {"value": "0.854545", "abox_jaccard": "0.818182", "vocab_jaccard": "1.000000"}
    assert ctx("sim", s0, s1, "--wa", "0.5", "--wv", "0.6")[0] == 2


def test_recurring_context_run(tmp_path):
    d = scenario(tmp_path, "Robo1:500,Robo2:500,Robo1:500")
    code, _, path = run(d)
    assert code == 0
    s = json.loads(path.read_text())["summary"]
    assert s["trainings"] == 2 and s["miss"] == 2 and s["exact"] >= 1

    code, text = ctx("report", path)
    assert code == 0
    fp0 = fingerprint(load_snapshot(d / "snapshots" / "s0.ctx"))
    assert any(line.startswith("Exact reuse") and fp0 in line for line in text.splitlines())


def test_single_segment_run(tmp_path):
    d = scenario(tmp_path, "Robo1:500")
    code, _, path = run(d)
    s = json.loads(path.read_text())["summary"]
    assert code == 0
    assert (s["trainings"], s["drift_alarms"], s["verdict"]) == (1, 0, "ContextSufficient")


def test_truncated_manifest(tmp_path):
    d = scenario(tmp_path, "Robo1:500,Robo2:500")
    (d / "short.txt").write_text("snapshots/s0.ctx\n")
    assert run(d, manifest="short.txt")[0] == 2
    code, _, path = run(d, "--on-unknown", "hold", manifest="short.txt")
    s = json.loads(path.read_text())["summary"]
    assert code == 0 and s["verdict"] == "ContextIncomplete"
    assert s["uncovered_alarm"]["index"] >= 500


def test_run_side_outputs(tmp_path):
    d = scenario(tmp_path, "Robo1:300,Robo2:300")
    code, _, path = run(d, "--alarms", d / "alarms.csv", "--registry", d / "registry.txt")
    assert code == 0
    report = json.loads(path.read_text())
    alarms = (d / "alarms.csv").read_text().splitlines()
    assert alarms[0] == "index,detector,kind,statistic"
    assert len(alarms) - 1 == sum(len(step["alarms"]) for step in report["log"])
    assert len((d / "registry.txt").read_text().splitlines()) == report["summary"]["trainings"]


def test_conservation(tmp_path):
    d = scenario(tmp_path, "Robo1:400,Robo2:300,Robo1:300", seed=3)
    _, _, path = run(d)
    report = json.loads(path.read_text())
    log, s = report["log"], report["summary"]
    assert [step["index"] for step in log] == list(range(1000))
    changes = sum(1 for a, b in zip(log, log[1:]) if a["snapshot_id"] != b["snapshot_id"])
    assert s["exact"] + s["similar"] + s["miss"] == changes + 1
    assert s["trainings"] == s["miss"]


def test_report_empty_and_tampered(tmp_path):
    d = scenario(tmp_path, "Robo1:200,Robo2:200")
    (d / "empty.csv").write_text("t,x1,label,snapshot_id\n")
    path = d / "empty.json"
    assert ctx("run", d / "manifest.txt", d / "empty.csv", "--out", path)[0] == 0
    code, text = ctx("report", path)
    assert code == 0
    table = text.split("metric,value\n", 1)[1]
    assert all(v == "0" for k, v in (row.split(",") for row in table.splitlines()) if k != "verdict")

    _, _, path = run(d)
    report = json.loads(path.read_text())
    report["summary"]["trainings"] += 1
    path.write_text(json.dumps(report))
    assert ctx("report", path)[0] == 1
    assert ctx("report", d / "nope.json")[0] == 2


def test_report_csv_option(tmp_path):
    d = scenario(tmp_path, "Robo1:200")
    _, _, path = run(d)
    code, text = ctx("report", path, "--csv", d / "summary.csv")
    assert code == 0 and "metric,value" not in text
    assert (d / "summary.csv").read_text().startswith("metric,value\nsamples,200\n")


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("# scenario\nsegments = Robo2:50\n")
    out = tmp_path / "o"
    assert ctx("scenario", "--config", cfg, "--out", out)[0] == 0
    assert len((out / "stream.csv").read_text().splitlines()) == 51
    assert ctx("scenario", "--config", cfg, "--set", "segments=Robo1:20", "--out", out)[0] == 0
    assert len((out / "stream.csv").read_text().splitlines()) == 21
    assert ctx("scenario", "--set", "nonsense=1", "--out", out)[0] == 2


@pytest.mark.parametrize("seed", [1, 2])
def test_runs_are_byte_identical(tmp_path, seed):
    d = scenario(tmp_path, "Robo1:300,Robo2:300", seed=seed)
    _, _, path = run(d)
    first = path.read_bytes()
    _, _, path = run(d)
    assert path.read_bytes() == first
