"""Authenticated world state.

``AuthTrie`` is a binary radix trie over keccak-256 hashed keys. Its root is a
pure function of the key/value set:

* empty subtree -> 32 zero bytes
* a subtree holding exactly one entry -> ``keccak(0x00 || hashed_key || keccak(value))``
* otherwise -> ``keccak(0x01 || left || right)``, splitting on the next key bit
  (most significant first)

Canonical serializations use 32-byte big-endian integers and length-prefixed
byte fields, in the field order of each type.
"""

from __future__ import annotations

import bisect
import enum
import re
from dataclasses import dataclass, field, replace

from .analyzer import ReorgPlan
from .hashing import ZERO32, keccak256, lp, u256
from .storage import StorageLayout, StorageMap

_ADDRESS_RE = re.compile(r"^0x[0-9a-f]{40}$")


class EmptyValue(ValueError):
    pass


def normalize_address(addr: str | bytes) -> str:
    if isinstance(addr, (bytes, bytearray)):
        if len(addr) != 20:
            raise ValueError(f"address must be 20 bytes, got {len(addr)}")
        return "0x" + bytes(addr).hex()
    text = addr.lower()
    if not text.startswith("0x"):
        text = "0x" + text
    if not _ADDRESS_RE.match(text):
        raise ValueError(f"malformed address {addr!r}")
    return text


def address_bytes(addr: str) -> bytes:
    return bytes.fromhex(normalize_address(addr)[2:])


class AuthTrie:
    """Authenticated key/value map with an order-independent Merkle root."""

    def __init__(self, entries: dict[bytes, bytes] | None = None) -> None:
        self._leaves: dict[int, tuple[bytes, bytes]] = {}
        self._root: bytes | None = ZERO32
        for k, v in (entries or {}).items():
            self.put(k, v)

    @staticmethod
    def _path(key: bytes) -> int:
        return int.from_bytes(keccak256(key), "big")

    def put(self, key: bytes, value: bytes) -> None:
        if not value:
            raise EmptyValue("trie values must be non-empty")
        self._leaves[self._path(key)] = (bytes(key), bytes(value))
        self._root = None

    def get(self, key: bytes) -> bytes | None:
        leaf = self._leaves.get(self._path(key))
        return leaf[1] if leaf else None

    def delete(self, key: bytes) -> None:
        if self._leaves.pop(self._path(key), None) is not None:
            self._root = None

    def __len__(self) -> int:
        return len(self._leaves)

    def __contains__(self, key: bytes) -> bool:
        return self._path(key) in self._leaves

    def items(self) -> list[tuple[bytes, bytes]]:
        return sorted(self._leaves.values())

    def copy(self) -> AuthTrie:
        new = AuthTrie()
        new._leaves = dict(self._leaves)
        new._root = self._root
        return new

    def __deepcopy__(self, memo) -> AuthTrie:
        return self.copy()

    def root(self) -> bytes:
        if self._root is None:
            paths = sorted(self._leaves)
            self._root = self._subtree(paths, 0, len(paths), 0)
        return self._root

    def _subtree(self, paths: list[int], lo: int, hi: int, depth: int) -> bytes:
        if hi == lo:
            return ZERO32
        if hi - lo == 1:
            path = paths[lo]
            value = self._leaves[path][1]
            return keccak256(b"\x00" + path.to_bytes(32, "big") + keccak256(value))
        shift = 255 - depth
        # all paths in [lo, hi) share their top `depth` bits
        split = ((paths[lo] >> (shift + 1)) << (shift + 1)) | (1 << shift)
        mid = bisect.bisect_left(paths, split, lo, hi)
        left = self._subtree(paths, lo, mid, depth + 1)
        right = self._subtree(paths, mid, hi, depth + 1)
        return keccak256(b"\x01" + left + right)


def trie_root(trie: AuthTrie) -> bytes:
    return trie.root()


def storage_root(storage: StorageMap) -> bytes:
    return AuthTrie({u256(slot): word for slot, word in storage.items()}).root()


@dataclass(frozen=True)
class GovernanceConfig:
    stakeholders: frozenset[str]
    approval_threshold: int
    deactivation_threshold: int
    proposal_timeout: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "stakeholders", frozenset(normalize_address(a) for a in self.stakeholders))
        n = len(self.stakeholders)
        if not 1 <= self.approval_threshold <= n:
            raise ValueError(f"approval_threshold must be in 1..{n}")
        if not 1 <= self.deactivation_threshold <= n:
            raise ValueError(f"deactivation_threshold must be in 1..{n}")
        if self.proposal_timeout < 1:
            raise ValueError("proposal_timeout must be >= 1")

    def encode(self) -> bytes:
        members = sorted(self.stakeholders)
        return (
            u256(len(members))
            + b"".join(lp(address_bytes(a)) for a in members)
            + u256(self.approval_threshold)
            + u256(self.deactivation_threshold)
            + u256(self.proposal_timeout)
        )

    @classmethod
    def from_json(cls, obj: dict) -> GovernanceConfig:
        return cls(
            frozenset(obj["stakeholders"]),
            int(obj["approval_threshold"]),
            int(obj["deactivation_threshold"]),
            int(obj["proposal_timeout"]),
        )

    def to_json(self) -> dict:
        return {
            "stakeholders": sorted(self.stakeholders),
            "approval_threshold": self.approval_threshold,
            "deactivation_threshold": self.deactivation_threshold,
            "proposal_timeout": self.proposal_timeout,
        }


class ProposalStatus(enum.IntEnum):
    ACTIVE = 0
    APPROVED = 1
    REJECTED = 2
    EXPIRED = 3
    APPLIED = 4

    @property
    def pending(self) -> bool:
        return self in (ProposalStatus.ACTIVE, ProposalStatus.APPROVED)

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass
class Proposal:
    id: int
    proposer: str
    new_code: bytes
    new_layout: StorageLayout
    plan: ReorgPlan
    dropped: frozenset[str]
    created_block: int
    status: ProposalStatus = ProposalStatus.ACTIVE
    approve_count: int = 0
    reject_count: int = 0
    halt_count: int = 0

    @property
    def new_code_digest(self) -> bytes:
        return keccak256(self.new_code)

    def encode(self) -> bytes:
        return (
            u256(self.id)
            + lp(address_bytes(self.proposer))
            + lp(self.new_code_digest)
            + lp(self.new_code)
            + lp(self.new_layout.encode())
            + lp(self.plan.encode())
            + u256(len(self.dropped))
            + b"".join(lp(n.encode()) for n in sorted(self.dropped))
            + u256(self.created_block)
            + u256(int(self.status))
            + u256(self.approve_count)
            + u256(self.reject_count)
            + u256(self.halt_count)
        )


def proposal_key(proposal_id: int) -> bytes:
    return u256(proposal_id)


def ballot_key(proposal_id: int, voter: str) -> bytes:
    return u256(proposal_id) + address_bytes(voter)


@dataclass
class ContractAccount:
    code: bytes
    layout: StorageLayout
    governance: GovernanceConfig
    storage: StorageMap = field(default_factory=StorageMap)
    layout_version: int = 0
    proposal_trie: AuthTrie = field(default_factory=AuthTrie)
    ballot_trie: AuthTrie = field(default_factory=AuthTrie)
    proposals: dict[int, Proposal] = field(default_factory=dict)
    active_proposal: int | None = None
    next_proposal_id: int = 0
    code_digest: bytes = b""

    def __post_init__(self) -> None:
        if not self.code_digest:
            self.code_digest = keccak256(self.code)

    def save_proposal(self, proposal: Proposal) -> None:
        """Store ``proposal`` and commit it to the proposal trie."""
        self.proposals[proposal.id] = proposal
        self.proposal_trie.put(proposal_key(proposal.id), proposal.encode())

    def pending_proposal(self) -> Proposal | None:
        if self.active_proposal is None:
            return None
        return self.proposals[self.active_proposal]

    def ballots(self, proposal_id: int) -> list[tuple[str, bytes]]:
        prefix = u256(proposal_id)
        return [
            ("0x" + k[32:].hex(), v) for k, v in self.ballot_trie.items() if len(k) == 52 and k[:32] == prefix
        ]

    def copy(self) -> ContractAccount:
        return replace(
            self,
            storage=self.storage.copy(),
            proposal_trie=self.proposal_trie.copy(),
            ballot_trie=self.ballot_trie.copy(),
            proposals={k: replace(p) for k, p in self.proposals.items()},
        )

    def encode(self) -> bytes:
        active = u256(0) + u256(0) if self.active_proposal is None else u256(1) + u256(self.active_proposal)
        return (
            lp(self.code_digest)
            + lp(self.layout.digest())
            + u256(self.layout_version)
            + lp(storage_root(self.storage))
            + lp(self.proposal_trie.root())
            + lp(self.ballot_trie.root())
            + lp(self.governance.encode())
            + active
            + u256(self.next_proposal_id)
        )


@dataclass
class WorldState:
    accounts: dict[str, ContractAccount] = field(default_factory=dict)
    block_number: int = 0

    def copy(self) -> WorldState:
        return WorldState({a: acct.copy() for a, acct in self.accounts.items()}, self.block_number)

    def encode(self) -> bytes:
        out = u256(self.block_number) + u256(len(self.accounts))
        for addr in sorted(self.accounts):
            out += lp(address_bytes(addr)) + lp(self.accounts[addr].encode())
        return out


def state_root(world: WorldState) -> bytes:
    return keccak256(world.encode())
