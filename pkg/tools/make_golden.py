"""Regenerate tests/golden/ from a real Solidity compiler.

Needs node with the ``solc`` npm package (``npm install solc@0.8.26``) reachable
through NODE_PATH. With ``--encodings`` the value-encoding corpus is rebuilt
too: constructors are executed by ``mini_evm`` and their storage is dumped.

    NODE_PATH=/path/to/node_modules python tools/make_golden.py [--encodings]

The output is committed; the test-suite only reads it.
"""

from __future__ import annotations

import argparse
import json
import random
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
GOLDEN = HERE.parent / "tests" / "golden"


def sol_type(t: dict) -> str:
    kind = t["kind"]
    if kind == "value":
        return f"uint{8 * t['width']}"
    if kind == "bool":
        return "bool"
    if kind == "fixed_array":
        return f"uint{8 * t['elem_width']}[{t['length']}]"
    if kind == "dyn_array":
        return f"uint{8 * t['elem_width']}[]"
    if kind == "bytes":
        return "string"
    if kind == "mapping":
        return f"mapping(uint256 => uint{8 * t['width']})"
    raise ValueError(kind)


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


def m(name, width=32):
    return {"name": name, "type": {"kind": "mapping", "width": width}}


HAND_WRITTEN = [
    [],
    [v("a", 32), v("b", 16), v("c", 16)],
    [v("a", 1), v("b", 32), v("c", 1)],
    [b("flag"), v("owner", 20), v("count", 8), b("paused"), v("total", 32)],
    [fa("prices", 12, 5), v("tail", 1)],
    [v("head", 4), fa("bytes40", 1, 40), fa("wide", 16, 3), b("done")],
    [v("x", 8), da("list", 32), v("y", 8), s("name"), v("z", 2)],
    [m("balances"), v("supply", 16), m("allowance", 4), b("live")],
    [fa("packed", 10, 3), fa("loose", 11, 3), v("n", 31), v("k", 2)],
]


def random_layouts(count: int, seed: int = 20250) -> list[list[dict]]:
    rng = random.Random(seed)
    out = []
    for li in range(count):
        decls = []
        for i in range(rng.randint(3, 12)):
            name = f"v{li}_{i}"
            kind = rng.choice(["value", "value", "value", "bool", "fixed", "dyn", "bytes", "map"])
            w = rng.choice([1, 2, 4, 8, 10, 12, 16, 20, 31, 32, rng.randint(1, 32)])
            if kind == "value":
                decls.append(v(name, w))
            elif kind == "bool":
                decls.append(b(name))
            elif kind == "fixed":
                decls.append(fa(name, w, rng.randint(1, 9)))
            elif kind == "dyn":
                decls.append(da(name, w))
            elif kind == "bytes":
                decls.append(s(name))
            else:
                decls.append(m(name, w))
        out.append(decls)
    return out


def contract_source(name: str, decls: list[dict], ctor: str = "") -> str:
    body = "\n".join(f"    {sol_type(d['type'])} {d['name']};" for d in decls)
    return f"// SPDX-License-Identifier: MIT\npragma solidity ^0.8.0;\ncontract {name} {{\n{body}\n{ctor}}}\n"


def run_solc(contracts: dict[str, str]) -> dict:
    proc = subprocess.run(
        ["node", str(HERE / "solc_layout.js")],
        input=json.dumps({"contracts": contracts}),
        capture_output=True,
        text=True,
        check=False,
    )
    if proc.returncode:
        sys.exit(proc.stderr)
    return json.loads(proc.stdout)


def make_layouts() -> None:
    corpus = HAND_WRITTEN + random_layouts(20 - len(HAND_WRITTEN))
    sources = {f"L{i:02d}": contract_source(f"L{i:02d}", decls) for i, decls in enumerate(corpus)}
    compiled = run_solc(sources)
    cases = []
    for i, decls in enumerate(corpus):
        name = f"L{i:02d}"
        cases.append(
            {
                "name": name,
                "description": decls,
                "solidity": sources[name],
                "solc_storage": [
                    {"label": e["label"], "slot": int(e["slot"]), "offset": e["offset"], "type": e["type"]}
                    for e in compiled["contracts"][name]["storage"]
                ],
            }
        )
    out = {"compiler": compiled["compiler"], "cases": cases}
    (GOLDEN / "storage_layouts.json").write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {len(cases)} layout cases ({compiled['compiler']})")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="rebuild tests/golden from solc output")
    parser.add_argument("--encodings", action="store_true", help="also rebuild the value-encoding corpus")
    args = parser.parse_args()
    GOLDEN.mkdir(parents=True, exist_ok=True)
    make_layouts()
    if args.encodings:
        from make_golden_encodings import make_encodings

        make_encodings(run_solc, contract_source)
