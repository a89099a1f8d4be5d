"""Contract storage: the 2**256 x 32-byte slot space and Solidity-style layouts.

Slots are plain ``int`` keys (always reduced modulo 2**256) and words are
32-byte ``bytes``. A byte *offset* inside a word counts from the lowest-order
end, the way the Solidity compiler reports it: a value of width ``w`` at
offset ``o`` lives in ``word[32 - o - w : 32 - o]``.

Logical values are native Python objects:

* ``int`` for unsigned value types,
* ``bool`` for booleans,
* ``bytes`` for ``bytes``/``string`` variables,
* ``list[int]`` for fixed and dynamic arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Union

from .hashing import MOD, WORD, ZERO32, keccak256, lp, u256

# Lengths above this are treated as corrupt headers; desk-scale states never
# come close and decoding them would walk an absurd number of slots.
MAX_DECODE_LENGTH = 1 << 24


class StorageError(Exception):
    pass


class DuplicateName(StorageError):
    pass


class InvalidWidth(StorageError):
    pass


class UnknownVariable(StorageError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class KindMismatch(StorageError, TypeError):
    pass


class MappingWriteUnsupported(StorageError):
    pass


class MalformedBytesHeader(StorageError):
    pass


class MalformedArrayLength(StorageError):
    pass


# --------------------------------------------------------------------------
# type descriptors


@dataclass(frozen=True)
class Value:
    """Unsigned value type of ``width`` bytes (uint8..uint256, address = 20)."""

    width: int

    def __post_init__(self) -> None:
        if isinstance(self.width, bool) or not isinstance(self.width, int) or not 1 <= self.width <= WORD:
            raise InvalidWidth(f"value width must be in 1..32, got {self.width!r}")


@dataclass(frozen=True)
class Bool:
    @property
    def width(self) -> int:
        return 1


@dataclass(frozen=True)
class FixedArray:
    elem: Value
    length: int

    def __post_init__(self) -> None:
        if not isinstance(self.elem, Value):
            raise InvalidWidth("fixed array elements must be value types")
        if not isinstance(self.length, int) or self.length < 1:
            raise InvalidWidth(f"fixed array length must be >= 1, got {self.length!r}")

    @property
    def per_slot(self) -> int:
        return WORD // self.elem.width

    @property
    def n_slots(self) -> int:
        return -(-self.length // self.per_slot)


@dataclass(frozen=True)
class DynArray:
    elem: Value

    def __post_init__(self) -> None:
        if not isinstance(self.elem, Value):
            raise InvalidWidth("dynamic array elements must be value types")


@dataclass(frozen=True)
class Bytes:
    """``bytes`` and ``string`` share one encoding."""


@dataclass(frozen=True)
class Mapping:
    value: Value
    key_kind: str = "uint256"

    def __post_init__(self) -> None:
        if not isinstance(self.value, Value):
            raise InvalidWidth("mapping values must be value types")


Descriptor = Union[Value, Bool, FixedArray, DynArray, Bytes, Mapping]
LogicalValue = Union[int, bool, bytes, list]


def is_packed(desc: Descriptor) -> bool:
    return isinstance(desc, (Value, Bool))


def header_slots(desc: Descriptor) -> int:
    """Number of consecutive declared slots the descriptor occupies."""
    if isinstance(desc, FixedArray):
        return desc.n_slots
    return 1


def descriptor_to_json(desc: Descriptor) -> dict:
    if isinstance(desc, Bool):
        return {"kind": "bool"}
    if isinstance(desc, Value):
        return {"kind": "value", "width": desc.width}
    if isinstance(desc, FixedArray):
        return {"kind": "fixed_array", "elem_width": desc.elem.width, "length": desc.length}
    if isinstance(desc, DynArray):
        return {"kind": "dyn_array", "elem_width": desc.elem.width}
    if isinstance(desc, Bytes):
        return {"kind": "bytes"}
    return {"kind": "mapping", "width": desc.value.width, "key": desc.key_kind}


def descriptor_from_json(obj: dict) -> Descriptor:
    try:
        kind = obj["kind"]
        if kind == "value":
            return Value(obj["width"])
        if kind == "bool":
            return Bool()
        if kind == "fixed_array":
            return FixedArray(Value(obj["elem_width"]), obj["length"])
        if kind == "dyn_array":
            return DynArray(Value(obj["elem_width"]))
        if kind in ("bytes", "string"):
            return Bytes()
        if kind == "mapping":
            return Mapping(Value(obj.get("width", 32)), obj.get("key", "uint256"))
    except KeyError as exc:
        raise StorageError(f"type description missing field {exc}") from None
    raise StorageError(f"unknown type kind {obj.get('kind')!r}")


def encode_descriptor(desc: Descriptor) -> bytes:
    """Canonical bytes of a descriptor (tag, then its integer parameters)."""
    d = descriptor_to_json(desc)
    out = lp(d["kind"].encode())
    for key in ("width", "elem_width", "length"):
        if key in d:
            out += u256(d[key])
    if "key" in d:
        out += lp(d["key"].encode())
    return out


# --------------------------------------------------------------------------
# layouts


@dataclass(frozen=True)
class VariableDecl:
    name: str
    descriptor: Descriptor


@dataclass(frozen=True)
class Variable:
    name: str
    descriptor: Descriptor
    slot: int
    offset: int

    @property
    def width(self) -> int:
        return self.descriptor.width if is_packed(self.descriptor) else WORD


@dataclass(frozen=True)
class StorageLayout:
    variables: tuple[Variable, ...] = ()
    next_free_slot: int = 0

    def __getitem__(self, name: str) -> Variable:
        for var in self.variables:
            if var.name == name:
                return var
        raise UnknownVariable(f"no variable named {name!r}")

    def __contains__(self, name: object) -> bool:
        return any(v.name == name for v in self.variables)

    def __iter__(self) -> Iterator[Variable]:
        return iter(self.variables)

    def __len__(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def decls(self) -> list[VariableDecl]:
        return [VariableDecl(v.name, v.descriptor) for v in self.variables]

    def encode(self) -> bytes:
        out = u256(len(self.variables))
        for v in self.variables:
            out += lp(v.name.encode()) + encode_descriptor(v.descriptor) + u256(v.slot) + u256(v.offset)
        return out + u256(self.next_free_slot)

    def digest(self) -> bytes:
        return keccak256(self.encode())

    def to_json(self) -> list[dict]:
        return [{"name": v.name, "slot": hex(v.slot), "offset": v.offset} for v in self.variables]


def assign_layout(decls: Iterable[VariableDecl]) -> StorageLayout:
    """Assign (slot, offset) positions in declaration order.

    Value types pack into the current slot when they fit, lower-order first;
    everything else starts a fresh slot, and whatever follows a non-value
    type starts a fresh slot too.
    """
    placed: list[Variable] = []
    seen: set[str] = set()
    slot, used = 0, 0  # used = bytes already taken in `slot`
    for decl in decls:
        if decl.name in seen:
            raise DuplicateName(f"variable {decl.name!r} declared twice")
        seen.add(decl.name)
        desc = decl.descriptor
        if is_packed(desc):
            w = desc.width
            if used + w > WORD:
                slot, used = slot + 1, 0
            placed.append(Variable(decl.name, desc, slot, used))
            used += w
        else:
            if used:
                slot, used = slot + 1, 0
            placed.append(Variable(decl.name, desc, slot, 0))
            slot += header_slots(desc)
    return StorageLayout(tuple(placed), slot + (1 if used else 0))


def layout_from_json(obj: list) -> StorageLayout:
    if not isinstance(obj, list):
        raise StorageError("layout description must be a list")
    decls = []
    for entry in obj:
        if "name" not in entry or "type" not in entry:
            raise StorageError(f"layout entry needs 'name' and 'type': {entry!r}")
        decls.append(VariableDecl(entry["name"], descriptor_from_json(entry["type"])))
    return assign_layout(decls)


def load_layout(path: str | Path) -> StorageLayout:
    with open(path) as f:
        return layout_from_json(json.load(f))


def layout_description(layout: StorageLayout) -> list[dict]:
    return [{"name": v.name, "type": descriptor_to_json(v.descriptor)} for v in layout]


# --------------------------------------------------------------------------
# slot derivation


def data_area_slot(header_slot: int) -> int:
    return int.from_bytes(keccak256(u256(header_slot)), "big")


def element_location(header_slot: int, elem_width: int, index: int) -> tuple[int, int]:
    per_slot = WORD // elem_width
    return (data_area_slot(header_slot) + index // per_slot) % MOD, (index % per_slot) * elem_width


def mapping_key_bytes(key: int | bytes, key_kind: str = "uint256") -> bytes:
    """Encode a mapping key the way Solidity hashes it.

    Value-type keys are left-padded to one word; ``bytes``/``string`` keys are
    hashed unpadded.
    """
    if isinstance(key, int):
        return u256(key)
    key = bytes(key)
    if key_kind in ("bytes", "string"):
        return key
    if len(key) > WORD:
        raise KindMismatch(f"value-type mapping key longer than 32 bytes ({len(key)})")
    return key.rjust(WORD, b"\0")


def mapping_entry_slot(header_slot: int, key: int | bytes, key_kind: str = "uint256") -> int:
    return int.from_bytes(keccak256(mapping_key_bytes(key, key_kind) + u256(header_slot)), "big")


# --------------------------------------------------------------------------
# the slot store


class StorageMap:
    """Sparse slot -> word store. All-zero words are never kept."""

    __slots__ = ("_words",)

    def __init__(self, words: dict[int, bytes] | None = None) -> None:
        self._words: dict[int, bytes] = {}
        for slot, word in (words or {}).items():
            self[slot] = word

    def __getitem__(self, slot: int) -> bytes:
        return self._words.get(slot % MOD, ZERO32)

    def __setitem__(self, slot: int, word: bytes) -> None:
        if len(word) != WORD:
            raise ValueError(f"storage words are 32 bytes, got {len(word)}")
        slot %= MOD
        if word == ZERO32:
            self._words.pop(slot, None)
        else:
            self._words[slot] = bytes(word)

    def __contains__(self, slot: object) -> bool:
        return isinstance(slot, int) and slot % MOD in self._words

    def __len__(self) -> int:
        return len(self._words)

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self._words))

    def items(self) -> list[tuple[int, bytes]]:
        return sorted(self._words.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StorageMap):
            return NotImplemented
        return self._words == other._words

    def __repr__(self) -> str:
        body = ", ".join(f"{hex(k)}: {v.hex()}" for k, v in self.items())
        return f"StorageMap({{{body}}})"

    def copy(self) -> StorageMap:
        new = StorageMap()
        new._words = dict(self._words)
        return new

    def to_json(self) -> dict[str, str]:
        return {hex(k): "0x" + v.hex() for k, v in self.items()}


def get_bytes(word: bytes, offset: int, width: int) -> bytes:
    return word[WORD - offset - width : WORD - offset]


def put_bytes(word: bytes, offset: int, width: int, data: bytes) -> bytes:
    assert len(data) == width and offset + width <= WORD
    return word[: WORD - offset - width] + data + word[WORD - offset :]


def _put_uint(store: StorageMap, slot: int, offset: int, width: int, n: int) -> None:
    store[slot] = put_bytes(store[slot], offset, width, n.to_bytes(width, "big"))


def _get_uint(store: StorageMap, slot: int, offset: int, width: int) -> int:
    return int.from_bytes(get_bytes(store[slot], offset, width), "big")


# --------------------------------------------------------------------------
# encode / decode


def decode_bytes_header(word: bytes) -> tuple[int, bool]:
    """Return ``(length, is_long)`` for a bytes/string header word."""
    n = int.from_bytes(word, "big")
    if n & 1:
        length = (n - 1) // 2
        if length < WORD or length > MAX_DECODE_LENGTH:
            raise MalformedBytesHeader(f"long-form header claims length {length}")
        return length, True
    length = word[-1] // 2
    if length > WORD - 1:
        raise MalformedBytesHeader(f"short-form header claims length {length}")
    if any(word[length : WORD - 1]):
        raise MalformedBytesHeader("short-form header has data past its length")
    return length, False


def dyn_length(store: StorageMap, header: int) -> int:
    n = int.from_bytes(store[header], "big")
    if n > MAX_DECODE_LENGTH:
        raise MalformedArrayLength(f"array header at {hex(header)} claims length {n}")
    return n


def dyn_data_slots(length: int, elem_width: int) -> int:
    return -(-length // (WORD // elem_width))


def variable_slots(store: StorageMap, var: Variable) -> list[int]:
    """Slots currently holding ``var``'s data (declared slots plus data area).

    Mapping entries are not enumerable, so only the header slot is reported.
    """
    desc = var.descriptor
    slots = [(var.slot + i) % MOD for i in range(header_slots(desc))]
    if isinstance(desc, DynArray):
        n = dyn_data_slots(dyn_length(store, var.slot), desc.elem.width)
        base = data_area_slot(var.slot) if n else 0
        slots += [(base + i) % MOD for i in range(n)]
    elif isinstance(desc, Bytes):
        length, is_long = decode_bytes_header(store[var.slot])
        if is_long:
            base = data_area_slot(var.slot)
            slots += [(base + i) % MOD for i in range(-(-length // WORD))]
    return slots


def _clear_variable(store: StorageMap, var: Variable) -> None:
    if is_packed(var.descriptor):
        store[var.slot] = put_bytes(store[var.slot], var.offset, var.width, bytes(var.width))
        return
    for slot in variable_slots(store, var):
        store[slot] = ZERO32


def _check_uint(value: object, width: int, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise KindMismatch(f"{what} expects an unsigned integer, got {type(value).__name__}")
    if not 0 <= value < 1 << (8 * width):
        raise KindMismatch(f"{what}: {value} does not fit in {width} bytes")
    return value


def _check_list(value: object, what: str) -> list:
    if not isinstance(value, (list, tuple)):
        raise KindMismatch(f"{what} expects a list of integers, got {type(value).__name__}")
    return list(value)


def write_variable(store: StorageMap, layout: StorageLayout, name: str, value: LogicalValue) -> StorageMap:
    """Return a copy of ``store`` with ``name`` set to ``value``."""
    var = layout[name]
    out = store.copy()
    write_variable_inplace(out, var, value)
    return out


def write_variable_inplace(store: StorageMap, var: Variable, value: LogicalValue) -> None:
    desc = var.descriptor
    what = f"variable {var.name!r}"
    if isinstance(desc, Mapping):
        raise MappingWriteUnsupported(f"{what} is a mapping; use write_mapping_entry")
    if isinstance(desc, Bool):
        if not isinstance(value, bool):
            raise KindMismatch(f"{what} expects a bool, got {type(value).__name__}")
        _put_uint(store, var.slot, var.offset, 1, int(value))
        return
    if isinstance(desc, Value):
        _put_uint(store, var.slot, var.offset, desc.width, _check_uint(value, desc.width, what))
        return
    if isinstance(desc, FixedArray):
        items = _check_list(value, what)
        if len(items) != desc.length:
            raise KindMismatch(f"{what} expects {desc.length} elements, got {len(items)}")
        w = desc.elem.width
        for i, item in enumerate(items):
            _put_uint(store, var.slot + i // desc.per_slot, (i % desc.per_slot) * w, w, _check_uint(item, w, what))
        return
    if isinstance(desc, DynArray):
        items = _check_list(value, what)
        w = desc.elem.width
        checked = [_check_uint(item, w, what) for item in items]
        _clear_variable(store, var)
        store[var.slot] = u256(len(checked))
        for i, item in enumerate(checked):
            slot, off = element_location(var.slot, w, i)
            _put_uint(store, slot, off, w, item)
        return
    # Bytes
    if not isinstance(value, (bytes, bytearray)):
        raise KindMismatch(f"{what} expects bytes, got {type(value).__name__}")
    data = bytes(value)
    _clear_variable(store, var)
    if len(data) < WORD:
        store[var.slot] = data.ljust(WORD - 1, b"\0") + bytes([2 * len(data)])
        return
    store[var.slot] = u256(2 * len(data) + 1)
    base = data_area_slot(var.slot)
    for i in range(0, len(data), WORD):
        store[base + i // WORD] = data[i : i + WORD].ljust(WORD, b"\0")


def read_variable(store: StorageMap, layout: StorageLayout, name: str) -> LogicalValue:
    return read_var(store, layout[name])


def read_var(store: StorageMap, var: Variable) -> LogicalValue:
    desc = var.descriptor
    if isinstance(desc, Mapping):
        raise KindMismatch(f"variable {var.name!r} is a mapping; use read_mapping_entry")
    if isinstance(desc, Bool):
        return bool(_get_uint(store, var.slot, var.offset, 1))
    if isinstance(desc, Value):
        return _get_uint(store, var.slot, var.offset, desc.width)
    if isinstance(desc, FixedArray):
        w, per = desc.elem.width, desc.per_slot
        return [_get_uint(store, var.slot + i // per, (i % per) * w, w) for i in range(desc.length)]
    if isinstance(desc, DynArray):
        w = desc.elem.width
        out = []
        for i in range(dyn_length(store, var.slot)):
            slot, off = element_location(var.slot, w, i)
            out.append(_get_uint(store, slot, off, w))
        return out
    header = store[var.slot]
    length, is_long = decode_bytes_header(header)
    if not is_long:
        return header[:length]
    base = data_area_slot(var.slot)
    data = b"".join(store[base + i] for i in range(-(-length // WORD)))
    return data[:length]


def zero_value(desc: Descriptor) -> LogicalValue:
    if isinstance(desc, Bool):
        return False
    if isinstance(desc, Value):
        return 0
    if isinstance(desc, FixedArray):
        return [0] * desc.length
    if isinstance(desc, DynArray):
        return []
    if isinstance(desc, Bytes):
        return b""
    raise KindMismatch("mappings have no whole-variable value")


def _mapping_var(layout: StorageLayout, name: str) -> Variable:
    var = layout[name]
    if not isinstance(var.descriptor, Mapping):
        raise KindMismatch(f"variable {name!r} is not a mapping")
    return var


def write_mapping_entry(
    store: StorageMap, layout: StorageLayout, name: str, key: int | bytes, value: int
) -> StorageMap:
    out = store.copy()
    write_mapping_entry_inplace(out, _mapping_var(layout, name), key, value)
    return out


def write_mapping_entry_inplace(store: StorageMap, var: Variable, key: int | bytes, value: int) -> None:
    desc = var.descriptor
    if not isinstance(desc, Mapping):
        raise KindMismatch(f"variable {var.name!r} is not a mapping")
    slot = mapping_entry_slot(var.slot, key, desc.key_kind)
    _put_uint(store, slot, 0, desc.value.width, _check_uint(value, desc.value.width, f"mapping {var.name!r}"))


def read_mapping_entry(store: StorageMap, layout: StorageLayout, name: str, key: int | bytes) -> int:
    var = _mapping_var(layout, name)
    desc = var.descriptor
    return _get_uint(store, mapping_entry_slot(var.slot, key, desc.key_kind), 0, desc.value.width)
