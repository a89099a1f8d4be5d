"""Upgrade a contract's layout without moving it to a new address.

The new version reorders two fields, drops one and adds another. The
analyzer turns the two layouts into a plan; the reorganizer runs the plan
against the old storage and the values come out under the new layout.
"""

from inplace_upgrade.analyzer import diff_layouts, plan_stats
from inplace_upgrade.reorganizer import execute_plan
from inplace_upgrade.storage import (
    Bytes,
    DynArray,
    StorageMap,
    Value,
    VariableDecl,
    assign_layout,
    read_variable,
    write_variable,
)

v1 = assign_layout(
    [
        VariableDecl("supply", Value(16)),
        VariableDecl("legacy_fee", Value(4)),
        VariableDecl("holders", DynArray(Value(20))),
        VariableDecl("symbol", Bytes()),
    ]
)
v2 = assign_layout(
    [
        VariableDecl("symbol", Bytes()),
        VariableDecl("supply", Value(16)),
        VariableDecl("decimals", Value(1)),
        VariableDecl("holders", DynArray(Value(20))),
    ]
)

store = StorageMap()
for name, value in [("supply", 10**24), ("legacy_fee", 7), ("holders", [0x11, 0x22, 0x33]), ("symbol", b"TKN")]:
    store = write_variable(store, v1, name, value)

plan = diff_layouts(v1, v2, dropped={"legacy_fee"})
print("plan:")
for ins in plan:
    print("  ", ins)
print("stats:", plan_stats(plan))

after, receipt = execute_plan(store, plan, v1)
print(f"\nexecuted {receipt.instructions_executed} instructions, gas {receipt.gas_used}, refund {receipt.gas_refund}")
for name in v2.names:
    print(f"  {name:<9} = {read_variable(after, v2, name)!r}")
