import csv
import io
import json
import subprocess
import sys

import pytest

from inplace_upgrade.cli import main
from inplace_upgrade.scenario import CSV_COLUMNS, bundled_scenarios

SCENARIOS = bundled_scenarios()
LAYOUTS = SCENARIOS[0].parent / "layouts"


def test_run_ok(capsys, tmp_path):
    out = tmp_path / "report.json"
    assert main(["run", str(SCENARIOS[0]), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "scenario SC1" in text and "assertions: 0 failed" in text
    report = json.loads(out.read_text())
    assert report["upgrades"][0]["n_reorgs"] == 2
    assert report["state_root"].startswith("0x")


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", str(SCENARIOS[2]), "--out", str(a)])
    main(["run", str(SCENARIOS[2]), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_run_assertion_failure(tmp_path, capsys):
    doc = json.loads(SCENARIOS[0].read_text())
    doc["steps"].append({"op": "assert", "kind": "reorg_count", "contract": "0x" + "c0" * 20, "id": 0, "n": 99})
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc).replace('"layouts/', f'"{LAYOUTS}/'))
    assert main(["run", str(path)]) == 1
    assert "assertion failed" in capsys.readouterr().err


def test_run_parse_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("[1, 2")
    assert main(["run", str(path)]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_gas_report_csv(tmp_path, capsys):
    dest = tmp_path / "gas.csv"
    assert main(["gas-report", str(SCENARIOS[0].parent), "--csv", str(dest)]) == 0
    rows = list(csv.DictReader(io.StringIO(dest.read_text())))
    assert [(r["n_vars"], r["n_reorgs"]) for r in rows] == [
        ("2", "2"), ("2", "3"), ("6", "10"), ("5", "5"), ("6", "12"), ("6", "12")
    ]
    assert "mean" in capsys.readouterr().out


def test_gas_report_empty_dir(tmp_path, capsys):
    assert main(["gas-report", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert "no scenarios" in out


def test_gas_report_schedule_file(tmp_path, capsys):
    sched = tmp_path / "sched.json"
    sched.write_text(json.dumps({"gas_schedule": {"sstore_set": 22100}}))
    main(["gas-report", str(SCENARIOS[0])])
    base = capsys.readouterr().out.splitlines()[1]
    main(["gas-report", str(SCENARIOS[0]), "--schedule", str(sched)])
    changed = capsys.readouterr().out.splitlines()[1]
    assert base != changed


def test_bad_schedule_is_a_parse_error(tmp_path):
    sched = tmp_path / "sched.json"
    sched.write_text(json.dumps({"warp_drive": 1}))
    assert main(["gas-report", str(SCENARIOS[0]), "--schedule", str(sched)]) == 2


def test_diff_layout(capsys):
    assert main(["diff-layout", str(LAYOUTS / "sc2_v1.json"), str(LAYOUTS / "sc2_v2.json"), "--dropped", "legacy_fee"]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert [i["op"] for i in plan["instructions"]] == ["copy_value", "clear_value", "copy_value"]


def test_diff_layout_undeclared_removal(capsys):
    assert main(["diff-layout", str(LAYOUTS / "sc2_v1.json"), str(LAYOUTS / "sc2_v2.json")]) == 2
    assert "UndeclaredRemoval" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "inplace_upgrade", "run", str(SCENARIOS[3])], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "reorgs=5" in proc.stdout
