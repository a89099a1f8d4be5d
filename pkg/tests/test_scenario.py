import json

import pytest

from inplace_upgrade.gas import GasSchedule
from inplace_upgrade.scenario import (
    CSV_COLUMNS,
    EXIT_ASSERTION,
    EXIT_OK,
    NoUpgradeInScenario,
    ParseError,
    bundled_scenarios,
    gas_report,
    run_scenario,
    value_from_json,
    value_to_json,
)
from inplace_upgrade.storage import Bytes, DynArray, Value

TABLE = {"SC1": (2, 2), "SC2": (2, 3), "SC3": (6, 10), "SC4": (5, 5), "SC5": (6, 12), "SC6": (6, 12)}

STAKE = ["0x" + f"{i:02x}" * 20 for i in (1, 2, 3)]
ADDR = "0x" + "c1" * 20


def scenario(tmp_path, steps, name="tiny"):
    doc = {
        "name": name,
        "contracts": [
            {
                "address": ADDR,
                "layout": [
                    {"name": "a", "type": {"kind": "value", "width": 16}},
                    {"name": "b", "type": {"kind": "value", "width": 16}},
                ],
                "code": "0x6000",
                "governance": {
                    "stakeholders": STAKE,
                    "approval_threshold": 2,
                    "deactivation_threshold": 2,
                    "proposal_timeout": 10,
                },
            }
        ],
        "steps": steps,
    }
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(doc))
    return path


SWAPPED = [
    {"name": "b", "type": {"kind": "value", "width": 16}},
    {"name": "a", "type": {"kind": "value", "width": 16}},
]


def upgrade_steps(check_a=1):
    return [
        {"op": "deploy", "contract": ADDR, "sender": STAKE[0]},
        {"op": "execute", "contract": ADDR, "mutations": [{"name": "a", "value": 1}, {"name": "b", "value": 2}]},
        {"op": "propose", "contract": ADDR, "sender": STAKE[0], "layout": SWAPPED},
        {"op": "vote", "contract": ADDR, "sender": STAKE[1], "proposal": 0, "choice": "approve"},
        {"op": "vote", "contract": ADDR, "sender": STAKE[2], "proposal": 0, "choice": "approve"},
        {"op": "apply", "contract": ADDR, "sender": STAKE[0], "proposal": 0},
        {"op": "assert", "kind": "variable_equals", "contract": ADDR, "name": "a", "value": check_a},
        {"op": "assert", "kind": "reorg_count", "contract": ADDR, "id": 0, "n": 2},
    ]


def test_bundled_set_is_complete():
    assert [p.stem for p in bundled_scenarios()] == ["sc1", "sc2", "sc3", "sc4", "sc5", "sc6"]


@pytest.mark.parametrize("path", bundled_scenarios(), ids=lambda p: p.stem)
def test_bundled_scenarios_pass(path):
    report = run_scenario(path)
    assert report.exit_code == EXIT_OK, report.render()
    (u,) = report.upgrades
    assert (u.n_vars, u.n_reorgs) == TABLE[report.scenario]


def test_sc1_final_status():
    report = run_scenario(bundled_scenarios()[0])
    statuses = [s.detail for s in report.steps if s.op == "assert:proposal_status"]
    assert statuses[-1] == "proposal 0 is applied"


def test_small_upgrade(tmp_path):
    report = run_scenario(scenario(tmp_path, upgrade_steps()))
    assert report.exit_code == EXIT_OK
    (u,) = report.upgrades
    assert u.n_reorgs == 2 and u.n_vars == 2
    assert u.reorg_gas > u.fresh_init_gas > 0


def test_failed_assertion(tmp_path):
    report = run_scenario(scenario(tmp_path, upgrade_steps(check_a=5)))
    assert report.exit_code == EXIT_ASSERTION
    (failure,) = report.failures
    assert failure.op == "assert:variable_equals"
    assert report.to_json()["assertions"]["failed"] == 1


def test_expect_mismatch_is_a_failure(tmp_path):
    steps = [
        {"op": "deploy", "contract": ADDR, "sender": STAKE[0]},
        {"op": "vote", "contract": ADDR, "sender": STAKE[0], "proposal": 0, "expect": "success"},
    ]
    report = run_scenario(scenario(tmp_path, steps))
    assert report.exit_code == EXIT_ASSERTION


def test_determinism(tmp_path):
    for path in bundled_scenarios():
        a, b = run_scenario(path), run_scenario(path)
        assert a.dumps() == b.dumps()


def test_schedule_override_changes_gas(tmp_path):
    path = scenario(tmp_path, upgrade_steps())
    base = run_scenario(path).upgrades[0]
    cheap = run_scenario(path, GasSchedule(sstore_set=5000)).upgrades[0]
    assert cheap.reorg_gas < base.reorg_gas


@pytest.mark.parametrize(
    "steps",
    [
        [],
        [{"op": "teleport", "contract": ADDR}],
        [{"op": "deploy", "contract": "0x" + "99" * 20}],
        [{"op": "deploy", "contract": ADDR}, {"op": "propose", "contract": ADDR, "layout": "missing.json"}],
        [{"op": "deploy", "contract": ADDR}, {"op": "assert", "kind": "mystery", "contract": ADDR, "id": 0}],
    ],
)
def test_parse_errors(tmp_path, steps):
    with pytest.raises(ParseError):
        run_scenario(scenario(tmp_path, steps))


def test_unreadable_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        run_scenario(bad)
    with pytest.raises(ParseError):
        run_scenario(tmp_path / "absent.json")


def test_gas_report_rows():
    report = gas_report(bundled_scenarios())
    assert [(r["scenario"], r["n_vars"], r["n_reorgs"]) for r in report.rows] == [
        (k, *v) for k, v in TABLE.items()
    ]
    lines = report.csv().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 7


def test_gas_report_empty():
    report = gas_report([])
    assert report.csv() == ",".join(CSV_COLUMNS) + "\n"
    assert report.summary() == {"count": 0}


def test_gas_report_needs_an_upgrade(tmp_path):
    path = scenario(tmp_path, [{"op": "deploy", "contract": ADDR, "sender": STAKE[0]}])
    with pytest.raises(NoUpgradeInScenario):
        gas_report([path])


def test_value_json_conversions():
    assert value_from_json(Bytes(), "hi") == b"hi"
    assert value_from_json(Bytes(), {"hex": "0x0102"}) == b"\x01\x02"
    assert value_from_json(Value(32), "0xff") == 255
    assert value_from_json(DynArray(Value(8)), [1, "0x2"]) == [1, 2]
    assert value_to_json(b"hi") == {"hex": "0x6869"}
    assert value_to_json(2**70) == 2**70


def test_upgrade_summary_reports_refund():
    (u,) = run_scenario(bundled_scenarios()[1]).upgrades
    out = u.to_json()
    assert out["reorg_refund"] > 0
    assert out["reorg_effective_gas"] == u.reorg_gas - min(u.reorg_refund, u.reorg_gas // 5)
    assert out["reorg_effective_gas"] < out["reorg_gas"]
