"""Layout diffing: turn an (old, new) layout pair into a reorganization plan.

Variables are matched by exact name. Anything that would silently lose data
is an error; the caller must list discarded variables in ``dropped``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Union

from .hashing import WORD, from_hex, keccak256, lp, to_hex, u256
from .storage import (
    Bool,
    Bytes,
    DynArray,
    FixedArray,
    Mapping,
    StorageLayout,
    Value,
    Variable,
)


class AnalyzerError(Exception):
    pass


class TypeChangedWithoutDrop(AnalyzerError):
    pass


class MappingRelocated(AnalyzerError):
    pass


class UndeclaredRemoval(AnalyzerError):
    pass


class UnknownDrop(AnalyzerError):
    pass


@dataclass(frozen=True)
class CopyValue:
    old_slot: int
    old_offset: int
    new_slot: int
    new_offset: int
    width: int
    op = "copy_value"


@dataclass(frozen=True)
class MoveDynArray:
    old_header: int
    new_header: int
    elem_width: int
    op = "move_dyn_array"


@dataclass(frozen=True)
class MoveBytes:
    old_header: int
    new_header: int
    op = "move_bytes"


@dataclass(frozen=True)
class ClearValue:
    slot: int
    offset: int
    width: int
    op = "clear_value"


@dataclass(frozen=True)
class ClearDynArea:
    header: int
    elem_width: int
    op = "clear_dyn_area"


@dataclass(frozen=True)
class ClearBytesArea:
    header: int
    op = "clear_bytes_area"


ReorgInstruction = Union[CopyValue, MoveDynArray, MoveBytes, ClearValue, ClearDynArea, ClearBytesArea]
INSTRUCTION_TYPES = {cls.op: cls for cls in (CopyValue, MoveDynArray, MoveBytes, ClearValue, ClearDynArea, ClearBytesArea)}
OP_CODES = {op: i for i, op in enumerate(INSTRUCTION_TYPES)}

# fields serialized as hex strings rather than ints
_SLOT_FIELDS = {"old_slot", "new_slot", "slot", "old_header", "new_header", "header"}


def instruction_to_json(ins: ReorgInstruction) -> dict:
    out: dict = {"op": ins.op}
    for f in fields(ins):
        v = getattr(ins, f.name)
        out[f.name] = hex(v) if f.name in _SLOT_FIELDS else v
    return out


def instruction_from_json(obj: dict) -> ReorgInstruction:
    try:
        cls = INSTRUCTION_TYPES[obj["op"]]
        kwargs = {}
        for f in fields(cls):
            v = obj[f.name]
            kwargs[f.name] = int(v, 16) if isinstance(v, str) else int(v)
    except (KeyError, ValueError, TypeError) as exc:
        raise AnalyzerError(f"malformed instruction {obj!r}: {exc}") from None
    return cls(**kwargs)


def encode_instruction(ins: ReorgInstruction) -> bytes:
    return u256(OP_CODES[ins.op]) + b"".join(u256(v) for v in astuple(ins))


@dataclass(frozen=True)
class ReorgPlan:
    instructions: tuple[ReorgInstruction, ...]
    old_layout_digest: bytes
    new_layout_digest: bytes

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def encode(self) -> bytes:
        body = b"".join(encode_instruction(i) for i in self.instructions)
        return lp(self.old_layout_digest) + lp(self.new_layout_digest) + u256(len(self.instructions)) + body

    def digest(self) -> bytes:
        return keccak256(self.encode())

    def to_json(self) -> dict:
        return {
            "old_layout_digest": to_hex(self.old_layout_digest),
            "new_layout_digest": to_hex(self.new_layout_digest),
            "instructions": [instruction_to_json(i) for i in self.instructions],
        }

    @classmethod
    def from_json(cls, obj: dict) -> ReorgPlan:
        try:
            return cls(
                tuple(instruction_from_json(i) for i in obj["instructions"]),
                from_hex(obj["old_layout_digest"]),
                from_hex(obj["new_layout_digest"]),
            )
        except (KeyError, ValueError) as exc:
            raise AnalyzerError(f"malformed plan: {exc}") from None


def _moves(old: Variable, new: Variable) -> list[ReorgInstruction]:
    desc = old.descriptor
    if isinstance(desc, (Value, Bool)):
        return [CopyValue(old.slot, old.offset, new.slot, new.offset, desc.width)]
    if isinstance(desc, FixedArray):
        # fixed arrays own whole slots, so move them slot by slot
        return [CopyValue(old.slot + i, 0, new.slot + i, 0, WORD) for i in range(desc.n_slots)]
    if isinstance(desc, DynArray):
        return [MoveDynArray(old.slot, new.slot, desc.elem.width)]
    if isinstance(desc, Bytes):
        return [MoveBytes(old.slot, new.slot)]
    raise MappingRelocated(f"mapping {old.name!r} cannot move from slot {hex(old.slot)} to {hex(new.slot)}")


def _clears(var: Variable) -> list[ReorgInstruction]:
    desc = var.descriptor
    if isinstance(desc, (Value, Bool)):
        return [ClearValue(var.slot, var.offset, desc.width)]
    if isinstance(desc, FixedArray):
        return [ClearValue(var.slot + i, 0, WORD) for i in range(desc.n_slots)]
    if isinstance(desc, DynArray):
        return [ClearDynArea(var.slot, desc.elem.width)]
    if isinstance(desc, Bytes):
        return [ClearBytesArea(var.slot)]
    raise MappingRelocated(f"mapping {var.name!r} cannot be dropped: its entries are not enumerable")


def diff_layouts(old: StorageLayout, new: StorageLayout, dropped: Iterable[str] = ()) -> ReorgPlan:
    """Plan that moves every preserved variable of ``old`` to its place in ``new``.

    Instructions follow the old declaration order. Variables only present in
    ``new`` get no instruction since unwritten storage reads as zero.
    """
    dropped = set(dropped)
    unknown = dropped - set(old.names)
    if unknown:
        raise UnknownDrop(f"dropped names not in the old layout: {sorted(unknown)}")
    plan: list[ReorgInstruction] = []
    for var in old:
        if var.name in dropped:
            plan.extend(_clears(var))
            continue
        if var.name not in new:
            raise UndeclaredRemoval(f"{var.name!r} is missing from the new layout but not listed as dropped")
        target = new[var.name]
        if target.descriptor != var.descriptor:
            raise TypeChangedWithoutDrop(
                f"{var.name!r} changes type {var.descriptor} -> {target.descriptor}; drop it explicitly"
            )
        if (target.slot, target.offset) != (var.slot, var.offset):
            plan.extend(_moves(var, target))
    return ReorgPlan(tuple(plan), old.digest(), new.digest())


def preserved_names(old: StorageLayout, new: StorageLayout, dropped: Iterable[str] = ()) -> list[str]:
    dropped = set(dropped)
    return [v.name for v in old if v.name not in dropped and v.name in new]


def infer_dropped(old: StorageLayout, plan: ReorgPlan) -> set[str]:
    """Names whose clearing instructions appear in ``plan``."""
    present = set(plan.instructions)
    out = set()
    for var in old:
        if isinstance(var.descriptor, Mapping):
            continue
        if _clears(var)[0] in present:
            out.add(var.name)
    return out


def verify_plan(old: StorageLayout, new: StorageLayout, plan: ReorgPlan) -> bool:
    """Independently re-derive the plan and compare it instruction for instruction."""
    try:
        expected = diff_layouts(old, new, infer_dropped(old, plan))
    except AnalyzerError:
        return False
    return expected == plan


def plan_stats(plan: ReorgPlan) -> dict[str, int]:
    counts = Counter(i.op for i in plan.instructions)
    stats = {op: counts.get(op, 0) for op in INSTRUCTION_TYPES}
    stats["total"] = len(plan.instructions)
    return stats
