"""Write the bundled SC1-SC6 scenarios into src/inplace_upgrade/scenarios/.

Each scenario deploys one contract, fills its storage, and runs one upgrade
through propose -> vote -> apply. The layouts are built so that the plan
sizes and variable counts match the six contracts of the gas study
(#Vars / #Reorgs = 2/2, 2/3, 6/10, 5/5, 6/12, 6/12).
"""

from __future__ import annotations

import hashlib
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "inplace_upgrade" / "scenarios"

STAKEHOLDERS = [f"0x{i:02x}" + "ab" * 19 for i in range(1, 6)]
OUTSIDER = "0x" + "ee" * 20
CONTRACT = "0x" + "c0" * 20
GOVERNANCE = {
    "stakeholders": STAKEHOLDERS,
    "approval_threshold": 3,
    "deactivation_threshold": 2,
    "proposal_timeout": 50,
}


def code(tag: str, size: int) -> str:
    out = b""
    seed = tag.encode()
    while len(out) < size:
        seed = hashlib.sha256(seed).digest()
        out += seed
    return "0x" + out[:size].hex()


def v(name, width):
    return {"name": name, "type": {"kind": "value", "width": width}}


def b(name):
    return {"name": name, "type": {"kind": "bool"}}


def fa(name, elem_width, length):
    return {"name": name, "type": {"kind": "fixed_array", "elem_width": elem_width, "length": length}}


def da(name, elem_width):
    return {"name": name, "type": {"kind": "dyn_array", "elem_width": elem_width}}


def s(name):
    return {"name": name, "type": {"kind": "bytes"}}


def nonzero(rng, width):
    return rng.getrandbits(8 * width) | 1


SC = {
    "sc1": {
        "label": "Simple",
        "v1": [v("owner", 20), v("total", 32)],
        "v2": [v("total", 32), v("owner", 20)],
        "dropped": [],
    },
    "sc2": {
        "label": "Simple",
        "v1": [v("rate", 16), v("legacy_fee", 16), v("balance", 32)],
        "v2": [v("balance", 32), v("rate", 16)],
        "dropped": ["legacy_fee"],
    },
    "sc3": {
        "label": "Moderate",
        "v1": [b("paused"), v("admin", 20), v("fee_bps", 2), v("supply", 32), fa("tiers", 32, 5), da("holders", 32)],
        "v2": [v("supply", 32), fa("tiers", 32, 5), da("holders", 32), b("paused"), v("admin", 20), v("fee_bps", 2)],
        "dropped": [],
    },
    "sc4": {
        "label": "Moderate",
        "v1": [s("name"), v("decimals", 1), v("cap", 16), da("balances", 16), v("ops", 32)],
        "v2": [v("ops", 32), da("balances", 16), v("cap", 16), v("decimals", 1), s("name")],
        "dropped": [],
    },
    "sc5": {
        "label": "Complex",
        "v1": [v("owner", 20), da("balances", 32), s("name"), s("symbol"), fa("matrix", 32, 7), da("tags", 8)],
        "v2": [da("tags", 8), fa("matrix", 32, 7), s("symbol"), s("name"), da("balances", 32), v("owner", 20)],
        "dropped": [],
    },
    "sc6": {
        "label": "Complex",
        "v1": [
            v("admin", 20),
            v("legacy", 12),
            da("data", 16),
            s("desc"),
            s("code_tag"),
            fa("limits", 8, 8),
            fa("counters", 32, 4),
            da("oldlist", 8),
        ],
        "v2": [s("desc"), s("code_tag"), fa("counters", 32, 4), fa("limits", 8, 8), da("data", 16), v("admin", 20)],
        "dropped": ["legacy", "oldlist"],
    },
}

TEXT = {
    "name": "Desk-scale reorganizable token, version one",  # 43 bytes, long form
    "symbol": "DRT",
    "desc": "Inventory ledger for the regional warehouse network; upgraded in place.",  # 70 bytes
    "code_tag": "INV-7",
}


def initial_value(rng, decl):
    t = decl["type"]
    kind = t["kind"]
    if kind == "value":
        return nonzero(rng, t["width"])
    if kind == "bool":
        return True
    if kind == "fixed_array":
        return [nonzero(rng, t["elem_width"]) for _ in range(t["length"])]
    if kind == "dyn_array":
        n = {"holders": 4, "balances": 6, "tags": 5, "data": 6, "oldlist": 3}[decl["name"]]
        return [nonzero(rng, t["elem_width"]) for _ in range(n)]
    if kind == "bytes":
        return TEXT[decl["name"]]
    raise ValueError(kind)


def hexify(value):
    if isinstance(value, int) and not isinstance(value, bool) and value >= 1 << 53:
        return hex(value)
    if isinstance(value, list):
        return [hexify(x) for x in value]
    return value


def scenario(key: str, cfg: dict) -> dict:
    rng = random.Random(key)
    values = {d["name"]: initial_value(rng, d) for d in cfg["v1"]}
    muts = [{"name": n, "value": hexify(val)} for n, val in values.items()]
    sender = STAKEHOLDERS[0]
    steps = [
        {"op": "deploy", "contract": CONTRACT, "sender": sender},
        {"op": "execute", "contract": CONTRACT, "sender": OUTSIDER, "mutations": muts},
        {"op": "advance_blocks", "n": 2},
        {
            "op": "propose",
            "contract": CONTRACT,
            "sender": sender,
            "code": code(key + "-v2", 900 + 150 * len(cfg["v2"])),
            "layout": f"layouts/{key}_v2.json",
            "dropped": cfg["dropped"],
        },
        {"op": "assert", "kind": "proposal_status", "contract": CONTRACT, "id": 0, "status": "active"},
    ]
    if key == "sc2":
        # exercise the deactivation gate and the single-ballot rule on the way
        steps += [
            {"op": "vote", "contract": CONTRACT, "sender": STAKEHOLDERS[1], "proposal": 0, "choice": "approve", "halt": True},
            {"op": "vote", "contract": CONTRACT, "sender": STAKEHOLDERS[1], "proposal": 0, "choice": "approve", "expect": "failure"},
            {"op": "vote", "contract": CONTRACT, "sender": STAKEHOLDERS[2], "proposal": 0, "choice": "reject", "halt": True},
            {"op": "execute", "contract": CONTRACT, "sender": OUTSIDER, "mutations": [{"name": "rate", "value": 1}], "expect": "failure"},
            {"op": "vote", "contract": CONTRACT, "sender": STAKEHOLDERS[3], "proposal": 0, "choice": "approve"},
            {"op": "vote", "contract": CONTRACT, "sender": STAKEHOLDERS[4], "proposal": 0, "choice": "approve"},
        ]
    else:
        steps += [
            {"op": "vote", "contract": CONTRACT, "sender": s_, "proposal": 0, "choice": "approve"} for s_ in STAKEHOLDERS[1:4]
        ]
    steps += [
        {"op": "assert", "kind": "proposal_status", "contract": CONTRACT, "id": 0, "status": "approved"},
        {"op": "advance_blocks", "n": 3},
        {"op": "apply", "contract": CONTRACT, "sender": STAKEHOLDERS[-1], "proposal": 0},
        {"op": "assert", "kind": "proposal_status", "contract": CONTRACT, "id": 0, "status": "applied"},
        {"op": "assert", "kind": "reorg_count", "contract": CONTRACT, "id": 0, "n": EXPECTED[key][1]},
    ]
    for n, val in values.items():
        if n not in cfg["dropped"]:
            steps.append({"op": "assert", "kind": "variable_equals", "contract": CONTRACT, "name": n, "value": hexify(val)})
    return {
        "name": key.upper(),
        "description": f"{cfg['label']} contract: {len(cfg['v2'])} variables, {EXPECTED[key][1]} reorganization instructions",
        "contracts": [
            {
                "address": CONTRACT,
                "layout": f"layouts/{key}_v1.json",
                "code": code(key + "-v1", 800 + 150 * len(cfg["v1"])),
                "governance": GOVERNANCE,
            }
        ],
        "steps": steps,
    }


EXPECTED = {"sc1": (2, 2), "sc2": (2, 3), "sc3": (6, 10), "sc4": (5, 5), "sc5": (6, 12), "sc6": (6, 12)}


def main() -> None:
    (OUT / "layouts").mkdir(parents=True, exist_ok=True)
    for key, cfg in SC.items():
        for ver in ("v1", "v2"):
            (OUT / "layouts" / f"{key}_{ver}.json").write_text(json.dumps(cfg[ver], indent=1) + "\n")
        (OUT / f"{key}.json").write_text(json.dumps(scenario(key, cfg), indent=1) + "\n")
    print(f"wrote {len(SC)} scenarios to {OUT}")


if __name__ == "__main__":
    main()
