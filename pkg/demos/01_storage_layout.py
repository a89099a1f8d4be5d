"""Where does each variable live?

Declares a small contract layout, writes some values and dumps the raw
storage words so the packing and the keccak-addressed data areas are visible.
"""

from inplace_upgrade.storage import (
    Bool,
    Bytes,
    DynArray,
    FixedArray,
    Mapping,
    StorageMap,
    Value,
    VariableDecl,
    assign_layout,
    mapping_entry_slot,
    read_variable,
    write_mapping_entry,
    write_variable,
)

layout = assign_layout(
    [
        VariableDecl("owner", Value(20)),
        VariableDecl("paused", Bool()),
        VariableDecl("fee_bps", Value(2)),
        VariableDecl("limits", FixedArray(Value(16), 3)),
        VariableDecl("history", DynArray(Value(8))),
        VariableDecl("name", Bytes()),
        VariableDecl("balances", Mapping(Value(32))),
    ]
)

print("layout:")
for var in layout:
    print(f"  {var.name:<9} slot {var.slot:<2} offset {var.offset:<2} width {var.width}")
print(f"  ({layout.next_free_slot} declared slots)\n")

store = StorageMap()
store = write_variable(store, layout, "owner", 0xAB * (1 << 152) + 1)
store = write_variable(store, layout, "paused", True)
store = write_variable(store, layout, "fee_bps", 30)
store = write_variable(store, layout, "limits", [10, 20, 30])
store = write_variable(store, layout, "history", [1, 2, 3, 4, 5])
store = write_variable(store, layout, "name", b"a name long enough to need a data area")
store = write_mapping_entry(store, layout, "balances", 0xBEEF, 1000)

print("storage:")
for slot, word in sorted(store.items()):
    label = f"{slot:#x}" if slot < 1 << 16 else f"{slot:#x}"[:14] + ".."
    print(f"  {label:<16} {word.hex()}")

print("\nread back:", read_variable(store, layout, "name"), read_variable(store, layout, "history"))
print("balances[0xbeef] lives at", hex(mapping_entry_slot(layout["balances"].slot, 0xBEEF)))
