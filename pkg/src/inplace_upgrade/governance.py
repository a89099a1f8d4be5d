"""Transaction processing and the upgrade proposal lifecycle.

Every transaction is applied to a copy of the world; a failing transaction
returns the original world untouched together with a failure receipt.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

from .analyzer import AnalyzerError, ReorgPlan, diff_layouts, verify_plan
from .gas import DEFAULT_SCHEDULE, GasMeter, GasSchedule
from .hashing import WORD, to_hex
from .reorganizer import ReorgFailure, apply_code_update, execute_plan
from .state import (
    ContractAccount,
    GovernanceConfig,
    Proposal,
    ProposalStatus,
    WorldState,
    ballot_key,
    normalize_address,
)
from .storage import (
    Bytes,
    DynArray,
    LogicalValue,
    StorageError,
    StorageLayout,
    decode_bytes_header,
    write_mapping_entry_inplace,
    write_variable_inplace,
)


class GovernanceError(Exception):
    pass


class UnknownContract(GovernanceError):
    pass


class ContractExists(GovernanceError):
    pass


class StaleBlock(GovernanceError):
    pass


class NotStakeholder(GovernanceError):
    pass


class ProposalAlreadyActive(GovernanceError):
    pass


class InvalidPlan(GovernanceError):
    pass


class NoActiveProposal(GovernanceError):
    pass


class AlreadyVoted(GovernanceError):
    pass


class ExecutionDeactivated(GovernanceError):
    pass


class ProposalNotApproved(GovernanceError):
    pass


class Choice(enum.IntEnum):
    APPROVE = 1
    REJECT = 2


# --------------------------------------------------------------------------
# transactions


@dataclass(frozen=True)
class Deploy:
    sender: str
    address: str
    code: bytes
    layout: StorageLayout
    governance: GovernanceConfig
    block: int | None = None


@dataclass(frozen=True)
class Propose:
    sender: str
    contract: str
    new_code: bytes
    new_layout: StorageLayout
    plan: ReorgPlan
    dropped: frozenset[str] = frozenset()
    block: int | None = None


@dataclass(frozen=True)
class Vote:
    sender: str
    contract: str
    proposal_id: int
    choice: Choice
    halt_execution: bool = False
    block: int | None = None


@dataclass(frozen=True)
class VarWrite:
    name: str
    value: LogicalValue


@dataclass(frozen=True)
class MapWrite:
    name: str
    key: int | bytes
    value: int


@dataclass(frozen=True)
class Execute:
    sender: str
    contract: str
    mutations: tuple[VarWrite | MapWrite, ...] = ()
    block: int | None = None


@dataclass(frozen=True)
class Apply:
    sender: str
    contract: str
    proposal_id: int
    block: int | None = None


Transaction = Union[Deploy, Propose, Vote, Execute, Apply]


@dataclass
class Receipt:
    status: str
    gas_used: int
    reason: str | None = None
    events: list[tuple[str, dict]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "success"

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.reason is not None:
            out["reason"] = self.reason
        out["gas_used"] = self.gas_used
        out["events"] = [{"tag": tag, "data": data} for tag, data in self.events]
        return out


# --------------------------------------------------------------------------
# processing


def process_transaction(
    world: WorldState, tx: Transaction, schedule: GasSchedule = DEFAULT_SCHEDULE
) -> tuple[WorldState, Receipt]:
    meter = GasMeter(schedule)
    meter.charge(schedule.tx_base)
    new = world.copy()
    events: list[tuple[str, dict]] = []
    try:
        block = world.block_number if tx.block is None else tx.block
        if block < world.block_number:
            raise StaleBlock(f"transaction block {block} is behind the chain head {world.block_number}")
        new.block_number = block
        if isinstance(tx, Deploy):
            handle_deploy(new, tx, meter, events)
        else:
            contract = normalize_address(tx.contract)
            if contract not in new.accounts:
                raise UnknownContract(f"no contract at {contract}")
            expired = _expire(new.accounts[contract], block)
            if expired is not None:
                events.append(("proposal_expired", {"id": expired.id}))
            handler = _HANDLERS[type(tx)]
            handler(new, tx, meter, events)
    except (GovernanceError, StorageError, AnalyzerError, ReorgFailure, ValueError) as exc:
        return world, Receipt("failure", meter.used, f"{type(exc).__name__}: {exc}")
    return new, Receipt("success", meter.used, None, events)


def _account(world: WorldState, addr: str) -> ContractAccount:
    return world.accounts[normalize_address(addr)]


def _require_stakeholder(acct: ContractAccount, sender: str) -> None:
    if normalize_address(sender) not in acct.governance.stakeholders:
        raise NotStakeholder(f"{sender} is not a stakeholder of this contract")


def handle_deploy(world: WorldState, tx: Deploy, meter: GasMeter, events: list) -> WorldState:
    addr = normalize_address(tx.address)
    if addr in world.accounts:
        raise ContractExists(f"a contract already lives at {addr}")
    meter.charge(meter.schedule.create_base + meter.schedule.code_deposit_per_byte * len(tx.code))
    acct = ContractAccount(bytes(tx.code), tx.layout, tx.governance)
    world.accounts[addr] = acct
    events.append(("deployed", {"address": addr, "code_digest": to_hex(acct.code_digest)}))
    return world


def handle_propose(world: WorldState, tx: Propose, meter: GasMeter, events: list) -> WorldState:
    acct = _account(world, tx.contract)
    _require_stakeholder(acct, tx.sender)
    if acct.pending_proposal() is not None:
        raise ProposalAlreadyActive(f"proposal {acct.active_proposal} is still pending")
    # nodes re-derive the plan instead of trusting the proposer
    try:
        expected = diff_layouts(acct.layout, tx.new_layout, tx.dropped)
    except AnalyzerError as exc:
        raise InvalidPlan(str(exc)) from None
    if expected != tx.plan or not verify_plan(acct.layout, tx.new_layout, tx.plan):
        raise InvalidPlan("plan does not match the re-derived reorganization")
    proposal = Proposal(
        id=acct.next_proposal_id,
        proposer=normalize_address(tx.sender),
        new_code=bytes(tx.new_code),
        new_layout=tx.new_layout,
        plan=tx.plan,
        dropped=frozenset(tx.dropped),
        created_block=world.block_number,
    )
    acct.next_proposal_id += 1
    acct.save_proposal(proposal)
    acct.active_proposal = proposal.id
    events.append(("proposal_created", {"id": proposal.id, "plan_size": len(tx.plan)}))
    return world


def handle_vote(world: WorldState, tx: Vote, meter: GasMeter, events: list) -> WorldState:
    acct = _account(world, tx.contract)
    _require_stakeholder(acct, tx.sender)
    proposal = acct.proposals.get(tx.proposal_id)
    if proposal is None or proposal.status is not ProposalStatus.ACTIVE:
        raise NoActiveProposal(f"proposal {tx.proposal_id} is not open for voting")
    key = ballot_key(proposal.id, tx.sender)
    if key in acct.ballot_trie:
        raise AlreadyVoted(f"{tx.sender} already voted on proposal {proposal.id}")
    choice = Choice(tx.choice)
    acct.ballot_trie.put(key, bytes([int(choice), int(bool(tx.halt_execution))]))
    if choice is Choice.APPROVE:
        proposal.approve_count += 1
    else:
        proposal.reject_count += 1
    if tx.halt_execution:
        proposal.halt_count += 1
    gov = acct.governance
    if proposal.approve_count >= gov.approval_threshold:
        proposal.status = ProposalStatus.APPROVED
    elif proposal.reject_count > len(gov.stakeholders) - gov.approval_threshold:
        proposal.status = ProposalStatus.REJECTED
        acct.active_proposal = None
    acct.save_proposal(proposal)
    events.append(("vote", {"id": proposal.id, "choice": choice.name.lower(), "status": proposal.status.label}))
    return world


def handle_execute(world: WorldState, tx: Execute, meter: GasMeter, events: list) -> WorldState:
    acct = _account(world, tx.contract)
    pending = acct.pending_proposal()
    if pending is not None and pending.halt_count >= acct.governance.deactivation_threshold:
        raise ExecutionDeactivated(f"execution halted by {pending.halt_count} stakeholders pending proposal {pending.id}")
    before = acct.storage
    store = before.copy()
    for m in tx.mutations:
        var = acct.layout[m.name]
        if isinstance(m, MapWrite):
            meter.charge_keccak(2 * WORD)
            write_mapping_entry_inplace(store, var, m.key, m.value)
        else:
            write_variable_inplace(store, var, m.value)
            desc = var.descriptor
            if (isinstance(desc, DynArray) and m.value) or (
                isinstance(desc, Bytes) and decode_bytes_header(store[var.slot])[1]
            ):
                meter.charge_keccak(WORD)
    for slot in sorted(set(before) | set(store)):
        if before[slot] != store[slot]:
            meter.charge_sstore(slot, before[slot], store[slot])
    acct.storage = store
    events.append(("executed", {"mutations": len(tx.mutations)}))
    return world


def handle_apply(world: WorldState, tx: Apply, meter: GasMeter, events: list) -> WorldState:
    addr = normalize_address(tx.contract)
    acct = world.accounts[addr]
    _require_stakeholder(acct, tx.sender)
    proposal = acct.proposals.get(tx.proposal_id)
    if proposal is None or proposal.status is not ProposalStatus.APPROVED:
        status = "missing" if proposal is None else proposal.status.label
        raise ProposalNotApproved(f"proposal {tx.proposal_id} is {status}")
    store, reorg = execute_plan(acct.storage, proposal.plan, acct.layout, meter)
    acct.storage = store
    acct = apply_code_update(acct, proposal.new_code, proposal.new_layout, meter)
    proposal.status = ProposalStatus.APPLIED
    acct.save_proposal(proposal)
    acct.active_proposal = None
    world.accounts[addr] = acct
    events.append(
        ("upgrade_applied", {"id": proposal.id, "layout_version": acct.layout_version, "reorg": reorg.to_json()})
    )
    return world


def _expire(acct: ContractAccount, current_block: int) -> Proposal | None:
    proposal = acct.pending_proposal()
    if proposal is None:
        return None
    if current_block - proposal.created_block >= acct.governance.proposal_timeout:
        proposal.status = ProposalStatus.EXPIRED
        acct.save_proposal(proposal)
        acct.active_proposal = None
        return proposal
    return None


def expire_check(world: WorldState, contract: str, current_block: int) -> WorldState:
    """Expire the contract's pending proposal if its timeout has elapsed."""
    _expire(_account(world, contract), current_block)
    return world


_HANDLERS = {
    Propose: handle_propose,
    Vote: handle_vote,
    Execute: handle_execute,
    Apply: handle_apply,
}
