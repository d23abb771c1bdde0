import csv
import json
import subprocess
import sys

import pytest

from warpmeas.cli import main
from warpmeas.errors import SchemaError
from warpmeas.report import PlotData, Record, Report, emit_report, render, report_from_json
from warpmeas.scenario import KINDS, emit_scenario, parse_scenario, scenario_from_dict
from warpmeas.suites import run_scenario


def _write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_minimal_scenario_defaults(tmp_path):
    s = parse_scenario(_write(tmp_path, {"kind": "deformation-verify", "parameters": {"dims": [4, 3]}}))
    assert s.seed == 0
    assert s.parameters["kappa_range"] == [-2.0, 2.0]
    assert s.parameters["dims"] == [4, 3]


@pytest.mark.parametrize(
    "doc, path",
    [
        ({"kind": "deformation-verify", "bogus": 1}, "<root>"),
        ({"kind": "deformation-verify", "parameters": {"dimz": [2, 2]}}, "parameters"),
        ({"kind": "pointer-shift", "parameters": {"psi": {"centre": 1.0}}}, "parameters.psi"),
        ({"kind": "moyal-study", "parameters": {"points": "many"}}, "parameters.points"),
    ],
)
def test_schema_errors_name_the_key(doc, path):
    with pytest.raises(SchemaError) as exc:
        scenario_from_dict(doc)
    msg = str(exc.value)
    assert msg.startswith(path + ":")
    for key in ("bogus", "dimz", "centre"):
        if key in json.dumps(doc):
            assert key in msg


def test_unknown_kind_and_missing_file(tmp_path):
    with pytest.raises(SchemaError, match="unknown scenario kind"):
        scenario_from_dict({"kind": "teleport"})
    with pytest.raises(SchemaError, match="not found"):
        parse_scenario(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SchemaError, match="malformed"):
        parse_scenario(bad)


@pytest.mark.parametrize("kind", KINDS)
def test_scenario_round_trip(tmp_path, kind):
    s = scenario_from_dict({"kind": kind, "seed": 7})
    path = tmp_path / "echo.json"
    emit_scenario(s, path)
    assert parse_scenario(path) == s


def test_deformation_suite_record_count():
    s = scenario_from_dict(
        {"kind": "deformation-verify", "parameters": {"dims": [[2, 4], [2, 4]], "instances": 10}}
    )
    r = run_scenario(s)
    assert len(r.records) == 20 and r.passed
    assert all(rec.instance for rec in r.records)


def test_pointer_shift_zero_coupling():
    r = run_scenario(scenario_from_dict({"kind": "pointer-shift", "parameters": {"kappas": [0.0]}}))
    (rec,) = r.records
    assert rec.passed and rec.value == pytest.approx(-1.0, abs=1e-10)


def test_moyal_study_plot(tmp_path):
    r = run_scenario(scenario_from_dict({"kind": "moyal-study"}))
    assert r.passed
    paths = emit_report(r, "json", tmp_path / "moyal.json")
    rows = list(csv.reader(paths[1].open()))
    assert rows[0][0] == "hbar [1]" and len(rows) == 4
    assert all(rec.value >= 0.9 for rec in r.records)


def test_emit_is_byte_stable(tmp_path):
    r = run_scenario(scenario_from_dict({"kind": "lemma-verify", "parameters": {"instances": 3}}))
    for fmt in ("json", "csv", "text"):
        a = emit_report(r, fmt, tmp_path / f"a.{fmt}")[0].read_bytes()
        b = emit_report(r, fmt, tmp_path / f"b.{fmt}")[0].read_bytes()
        assert a == b


def test_empty_report(tmp_path):
    r = Report({"kind": "lemma-verify", "seed": 0}, ())
    doc = json.loads(render(r, "json"))
    assert doc["records"] == [] and doc["summary"] == {"total": 0, "passed": 0, "failed": 0}
    assert render(r, "csv").strip() == "name,defect,tolerance,passed,value,instance"


def test_json_reparse_gives_same_csv():
    r = run_scenario(scenario_from_dict({"kind": "growth-bound", "parameters": {"samples": 8}}))
    again = report_from_json(render(r, "json"))
    assert render(again, "csv") == render(r, "csv")
    assert render(again, "json") == render(r, "json")


def test_record_pass_flag_and_float_format():
    rec = Record("x", 0.1 + 0.2, 0.3)
    assert not rec.passed
    assert "0.30000000000000004" in render(Report({}, (rec,)), "json")
    assert Record("y", float("nan"), 1.0).passed is False


def test_plot_header_has_units():
    text = PlotData(("y", "v"), ("1/length", "1"), ((1.0, 2.0),)).to_csv()
    assert text.splitlines()[0] == "y [1/length],v [1]"


def test_same_seed_same_bytes(tmp_path):
    scen = _write(tmp_path, {"kind": "measured-observable", "seed": 3, "parameters": {"probes": 3}})
    outs = []
    for name in ("one.json", "two.json"):
        assert main(["measured-observable", "--scenario", str(scen), "--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    assert main(["measured-observable", "--scenario", str(scen), "--seed", "4", "--out", str(tmp_path / "x.json")]) == 0
    assert (tmp_path / "x.json").read_bytes() != outs[0]


def test_timings_only_on_request(tmp_path):
    out = tmp_path / "r.json"
    main(["pointer-shift", "--out", str(out)])
    assert "timings" not in json.loads(out.read_text())
    main(["pointer-shift", "--out", str(out), "--timings"])
    assert "total_seconds" in json.loads(out.read_text())["timings"]


def test_exit_codes(tmp_path, capsys):
    strict = _write(tmp_path, {"kind": "deformation-verify", "parameters": {"instances": 2, "tolerance": 1e-300}})
    assert main(["deformation-verify", "--scenario", str(strict), "--out", str(tmp_path / "f.json")]) == 1
    bad = _write(tmp_path, {"kind": "deformation-verify", "extra": True}, "bad.json")
    assert main(["deformation-verify", "--scenario", str(bad)]) == 2
    assert "extra" in capsys.readouterr().err
    assert main(["lemma-verify", "--scenario", str(strict)]) == 2
    big = _write(tmp_path, {"kind": "deformation-verify", "parameters": {"dims": [8, 8], "instances": 1}}, "big.json")
    assert main(["deformation-verify", "--scenario", str(big), "--max-dim", "32"]) == 3
    assert main(["lemma-verify", "--out", str(tmp_path / "ok.csv"), "--format", "csv"]) == 0


def test_console_entry_point(tmp_path):
    out = tmp_path / "report.txt"
    proc = subprocess.run(
        [sys.executable, "-m", "warpmeas.cli", "pointer-shift", "--format", "text", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "4/4 passed" in out.read_text()
    assert (tmp_path / "report_plot.csv").exists()
