"""Executes reorganization plans against contract storage.

Execution runs in three phases so that overlapping sources and destinations
(swaps, cycles, a dropped variable's slot reused by a moved one) are safe:

1. snapshot: read every source and clear target, charging SLOAD;
2. clear: zero every source location and clear target;
3. write: place the buffered data at the destinations.

Each phase issues at most one physical store per slot.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass, replace

from .analyzer import (
    ClearBytesArea,
    ClearDynArea,
    ClearValue,
    CopyValue,
    MoveBytes,
    MoveDynArray,
    ReorgPlan,
)
from .gas import GasMeter
from .hashing import MOD, WORD, keccak256
from .state import ContractAccount
from .storage import (
    StorageLayout,
    StorageMap,
    data_area_slot,
    decode_bytes_header,
    dyn_data_slots,
    get_bytes,
    put_bytes,
    MAX_DECODE_LENGTH,
    MalformedArrayLength,
)


class ReorgFailure(Exception):
    pass


@dataclass
class ReorgReceipt:
    instructions_executed: int = 0
    slots_read: int = 0
    slots_written: int = 0
    slots_cleared: int = 0
    gas_used: int = 0
    gas_refund: int = 0

    def to_json(self) -> dict:
        return asdict(self)


class _Snapshot:
    def __init__(self, store: StorageMap, meter: GasMeter) -> None:
        self.store = store
        self.meter = meter
        self.words: dict[int, bytes] = {}
        self.clears: dict[int, list[tuple[int, int]]] = defaultdict(list)
        self.writes: dict[int, list[tuple[int, bytes]]] = defaultdict(list)
        self.pending_hashes = 0

    def load(self, slot: int) -> bytes:
        slot %= MOD
        if slot not in self.words:
            self.meter.charge_sload(slot)
            self.words[slot] = self.store[slot]
        return self.words[slot]

    def take(self, slot: int, offset: int = 0, width: int = WORD) -> bytes:
        """Read a source range and schedule it for clearing."""
        data = get_bytes(self.load(slot), offset, width)
        self.clears[slot % MOD].append((offset, width))
        return data

    def put(self, slot: int, data: bytes, offset: int = 0) -> None:
        self.writes[slot % MOD].append((offset, data))

    def take_area(self, header: int, n_slots: int) -> list[bytes]:
        if not n_slots:
            return []
        self.meter.charge_keccak(WORD)
        base = data_area_slot(header)
        return [self.take(base + i) for i in range(n_slots)]

    def put_area(self, header: int, words: list[bytes]) -> None:
        if not words:
            return
        self.pending_hashes += 1
        base = data_area_slot(header)
        for i, word in enumerate(words):
            self.put(base + i, word)


def _dyn_header(snap: _Snapshot, header: int) -> tuple[bytes, int]:
    word = snap.take(header)
    n = int.from_bytes(word, "big")
    if n > MAX_DECODE_LENGTH:
        raise MalformedArrayLength(f"array header at {hex(header)} claims length {n}")
    return word, n


def _bytes_header(snap: _Snapshot, header: int) -> tuple[bytes, int]:
    word = snap.take(header)
    length, is_long = decode_bytes_header(word)
    return word, (-(-length // WORD) if is_long else 0)


def execute_plan(
    storage: StorageMap, plan: ReorgPlan, layout_old: StorageLayout, meter: GasMeter | None = None
) -> tuple[StorageMap, ReorgReceipt]:
    if plan.old_layout_digest != layout_old.digest():
        raise ReorgFailure("plan was not generated from the contract's current layout")
    meter = meter if meter is not None else GasMeter()
    used0, refund0 = meter.used, meter.refund
    store = storage.copy()
    snap = _Snapshot(store, meter)

    for ins in plan:
        if isinstance(ins, CopyValue):
            snap.put(ins.new_slot, snap.take(ins.old_slot, ins.old_offset, ins.width), ins.new_offset)
        elif isinstance(ins, MoveDynArray):
            word, n = _dyn_header(snap, ins.old_header)
            snap.put(ins.new_header, word)
            snap.put_area(ins.new_header, snap.take_area(ins.old_header, dyn_data_slots(n, ins.elem_width)))
        elif isinstance(ins, MoveBytes):
            word, n_slots = _bytes_header(snap, ins.old_header)
            snap.put(ins.new_header, word)
            snap.put_area(ins.new_header, snap.take_area(ins.old_header, n_slots))
        elif isinstance(ins, ClearValue):
            snap.take(ins.slot, ins.offset, ins.width)
        elif isinstance(ins, ClearDynArea):
            _, n = _dyn_header(snap, ins.header)
            snap.take_area(ins.header, dyn_data_slots(n, ins.elem_width))
        elif isinstance(ins, ClearBytesArea):
            _, n_slots = _bytes_header(snap, ins.header)
            snap.take_area(ins.header, n_slots)
        else:
            raise ReorgFailure(f"unknown instruction {ins!r}")

    receipt = ReorgReceipt(instructions_executed=len(plan), slots_read=len(snap.words))

    for slot in sorted(snap.clears):
        old = store[slot]
        new = old
        for offset, width in snap.clears[slot]:
            new = put_bytes(new, offset, width, bytes(width))
        meter.charge_sstore(slot, old, new)
        store[slot] = new
        receipt.slots_cleared += 1

    for _ in range(snap.pending_hashes):
        meter.charge_keccak(WORD)
    for slot in sorted(snap.writes):
        old = store[slot]
        new = old
        for offset, data in snap.writes[slot]:
            new = put_bytes(new, offset, len(data), data)
        meter.charge_sstore(slot, old, new)
        store[slot] = new
        receipt.slots_written += 1

    receipt.gas_used = meter.used - used0
    receipt.gas_refund = meter.refund - refund0
    return store, receipt


def apply_code_update(
    account: ContractAccount, new_code: bytes, new_layout: StorageLayout, meter: GasMeter | None = None
) -> ContractAccount:
    """Install new code and layout; the storage has already been reorganized."""
    if meter is not None:
        meter.charge(meter.schedule.code_deposit_per_byte * len(new_code))
    return replace(
        account,
        code=bytes(new_code),
        code_digest=keccak256(new_code),
        layout=new_layout,
        layout_version=account.layout_version + 1,
    )
