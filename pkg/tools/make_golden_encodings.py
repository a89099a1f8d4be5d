"""Value-encoding corpus: storage dumps produced by running compiled constructors.

For each of the 20 layouts in tests/golden/storage_layouts.json a constructor
assigns seeded values (strings straddling the 31/32-byte boundary, dynamic
arrays of several lengths, mapping entries). The constructor is compiled by
solc and executed by tools/mini_evm.py; the resulting storage is frozen.

    NODE_PATH=/path/to/node_modules python tools/make_golden.py --encodings
"""

from __future__ import annotations

import json
import random
import string
from pathlib import Path

from mini_evm import run_initcode

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"
STRING_LENGTHS = [0, 1, 5, 30, 31, 32, 33, 63, 64, 65, 100]


def _uint(rng, width):
    r = rng.random()
    if r < 0.1:
        return (1 << (8 * width)) - 1
    return rng.getrandbits(8 * width) | 1


def seeded_values(decls, rng, lengths):
    # decimal literals: 40-hex-digit literals would parse as addresses
    values, entries, lines = {}, {}, []
    for d in decls:
        name, t = d["name"], d["type"]
        kind = t["kind"]
        if kind == "value":
            x = _uint(rng, t["width"])
            values[name] = hex(x)
            lines.append(f"{name} = {x};")
        elif kind == "bool":
            x = rng.random() < 0.7
            values[name] = x
            lines.append(f"{name} = {'true' if x else 'false'};")
        elif kind == "fixed_array":
            xs = [_uint(rng, t["elem_width"]) for _ in range(t["length"])]
            values[name] = [hex(x) for x in xs]
            lines += [f"{name}[{i}] = {x};" for i, x in enumerate(xs)]
        elif kind == "dyn_array":
            xs = [_uint(rng, t["elem_width"]) for _ in range(rng.choice([0, 1, 2, 3, 7, 20]))]
            values[name] = [hex(x) for x in xs]
            lines += [f"{name}.push({x});" for x in xs]
        elif kind == "bytes":
            n = next(lengths)
            text = "".join(rng.choice(string.ascii_letters + string.digits + " ") for _ in range(n))
            values[name] = text
            lines.append(f'{name} = "{text}";')
        elif kind == "mapping":
            kv = {rng.getrandbits(rng.choice([8, 64, 256])): _uint(rng, t["width"]) for _ in range(rng.randint(0, 3))}
            entries[name] = [[hex(k), hex(v)] for k, v in sorted(kv.items())]
            lines += [f"{name}[{k}] = {v};" for k, v in sorted(kv.items())]
    return values, entries, lines


def make_encodings(run_solc, contract_source) -> None:
    layouts = json.loads((GOLDEN / "storage_layouts.json").read_text())
    rng = random.Random(4242)
    lengths = iter(STRING_LENGTHS * 10)
    plans, sources = [], {}
    for case in layouts["cases"]:
        decls = case["description"]
        values, entries, lines = seeded_values(decls, rng, lengths)
        name = "E" + case["name"][1:]
        ctor = "    constructor() {\n" + "".join(f"        {ln}\n" for ln in lines) + "    }\n"
        sources[name] = contract_source(name, decls, ctor)
        plans.append((name, decls, values, entries))
    compiled = run_solc(sources)
    cases = []
    for name, decls, values, entries in plans:
        storage = run_initcode(bytes.fromhex(compiled["contracts"][name]["bytecode"]))
        cases.append(
            {
                "name": name,
                "description": decls,
                "values": values,
                "entries": entries,
                "solidity": sources[name],
                "storage": {hex(k): "0x" + v.to_bytes(32, "big").hex() for k, v in sorted(storage.items())},
            }
        )
    out = {"compiler": compiled["compiler"], "executor": "tools/mini_evm.py", "cases": cases}
    (GOLDEN / "storage_encodings.json").write_text(json.dumps(out, indent=1) + "\n")
    n_strings = sum(d["type"]["kind"] == "bytes" for c in cases for d in c["description"])
    print(f"wrote {len(cases)} encoding cases, {n_strings} strings ({compiled['compiler']})")
