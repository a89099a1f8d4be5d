"""Opcode-mapped gas accounting and the two comparison baselines.

Storage work done outside the EVM is priced by mapping it to the opcode an
in-EVM implementation would use: SLOAD for reads, SSTORE for writes and
KECCAK256 for every data-area derivation. Defaults follow the post-Berlin
(EIP-2929 / EIP-3529) schedule.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

from .hashing import WORD, ZERO32
from .storage import (
    Bytes,
    DynArray,
    LogicalValue,
    Mapping,
    StorageLayout,
    StorageMap,
    Variable,
    decode_bytes_header,
    read_var,
    variable_slots,
    write_variable_inplace,
)


@dataclass(frozen=True)
class GasSchedule:
    sload_cold: int = 2100
    sload_warm: int = 100
    sstore_set: int = 20000
    sstore_update: int = 2900
    sstore_clear_refund: int = 4800
    keccak_base: int = 30
    keccak_per_word: int = 6
    tx_base: int = 21000
    create_base: int = 32000
    code_deposit_per_byte: int = 200

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError(f"gas schedule field {f.name} must be a non-negative int, got {v!r}")
        if self.sload_warm > self.sload_cold:
            raise ValueError("sload_warm must not exceed sload_cold")
        if self.sstore_update > self.sstore_set:
            raise ValueError("sstore_update must not exceed sstore_set")

    @classmethod
    def from_overrides(cls, overrides: dict | None) -> GasSchedule:
        if not overrides:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown gas schedule fields: {sorted(unknown)}")
        return replace(cls(), **overrides)

    def to_json(self) -> dict:
        return asdict(self)


DEFAULT_SCHEDULE = GasSchedule()


@dataclass
class GasMeter:
    schedule: GasSchedule = DEFAULT_SCHEDULE
    warm_slots: set = field(default_factory=set)
    used: int = 0
    refund: int = 0

    def charge(self, amount: int) -> None:
        self.used += amount

    def charge_sload(self, slot: int) -> int:
        if slot in self.warm_slots:
            cost = self.schedule.sload_warm
        else:
            cost = self.schedule.sload_cold
            self.warm_slots.add(slot)
        self.used += cost
        return cost

    def charge_sstore(self, slot: int, old_word: bytes, new_word: bytes) -> int:
        # Clearing a nonzero slot still pays the reset cost, as SSTORE does.
        old_zero, new_zero = old_word == ZERO32, new_word == ZERO32
        if old_zero and new_zero:
            cost = 0
        elif old_zero:
            cost = self.schedule.sstore_set
        else:
            cost = self.schedule.sstore_update
            if new_zero:
                self.refund += self.schedule.sstore_clear_refund
        self.warm_slots.add(slot)
        self.used += cost
        return cost

    def charge_keccak(self, n_bytes: int) -> int:
        cost = self.schedule.keccak_base + self.schedule.keccak_per_word * (-(-n_bytes // WORD))
        self.used += cost
        return cost

    @property
    def effective(self) -> int:
        """Gas after the EIP-3529 refund cap (refund <= used / 5)."""
        return self.used - min(self.refund, self.used // 5)


def needs_derivation(store: StorageMap, var: Variable) -> bool:
    """Whether addressing ``var``'s current data requires hashing its header slot."""
    if isinstance(var.descriptor, DynArray):
        return store[var.slot] != ZERO32
    if isinstance(var.descriptor, Bytes):
        return decode_bytes_header(store[var.slot])[1]
    return False


def _derivations(store: StorageMap, layout: StorageLayout) -> int:
    return sum(needs_derivation(store, var) for var in layout)


def estimate_fresh_init(
    layout: StorageLayout, values: dict[str, LogicalValue], schedule: GasSchedule = DEFAULT_SCHEDULE
) -> int:
    """Gas to write ``values`` into an empty contract laid out as ``layout``.

    Writes to the same slot are batched, so a slot shared by packed values
    costs a single zero-to-nonzero store.
    """
    store = StorageMap()
    for name, value in values.items():
        write_variable_inplace(store, layout[name], value)
    meter = GasMeter(schedule)
    for _ in range(_derivations(store, layout)):
        meter.charge_keccak(WORD)
    for slot, word in store.items():
        meter.charge_sstore(slot, ZERO32, word)
    return meter.used


def estimate_migration(
    old_layout: StorageLayout,
    new_layout: StorageLayout,
    state: StorageMap,
    schedule: GasSchedule = DEFAULT_SCHEDULE,
    new_code: bytes = b"",
    new_values: dict[str, LogicalValue] | None = None,
    dropped: frozenset[str] | set[str] = frozenset(),
) -> int:
    """Gas for destroy-redeploy-migrate: create the new contract, read every
    preserved variable from the old one (cold) and initialise the new one.

    ``new_values`` holds the values the new contract should start with; by
    default these are the preserved variables' current values.
    """
    preserved = [
        v
        for v in old_layout
        if v.name not in dropped and v.name in new_layout and v.descriptor == new_layout[v.name].descriptor
    ]
    meter = GasMeter(schedule)
    meter.charge(schedule.tx_base + schedule.create_base + schedule.code_deposit_per_byte * len(new_code))
    for var in preserved:
        if isinstance(var.descriptor, Mapping):
            continue
        if needs_derivation(state, var):
            meter.charge_keccak(WORD)
        for slot in variable_slots(state, var):
            meter.charge_sload(slot)
    if new_values is None:
        new_values = {
            v.name: read_var(state, v) for v in preserved if not isinstance(v.descriptor, Mapping)
        }
    return meter.used + estimate_fresh_init(new_layout, new_values, schedule)


def overhead_percent(reorg_gas: int, fresh_init_gas: int) -> float:
    if fresh_init_gas == 0:
        return 0.0
    return 100.0 * (reorg_gas - fresh_init_gas) / fresh_init_gas
