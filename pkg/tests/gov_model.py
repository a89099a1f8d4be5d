"""Small-model checks of the governance state machine.

``Chain`` wraps ``process_transaction`` and asserts atomicity on every failed
transaction; the ``check_*`` functions enumerate every ballot or halt pattern
for a given number of stakeholders and raise AssertionError on the first
divergence from the reference rules.
"""

from __future__ import annotations

import itertools

from inplace_upgrade.analyzer import diff_layouts
from inplace_upgrade.governance import Apply, Choice, Deploy, Execute, Propose, VarWrite, Vote, expire_check, process_transaction
from inplace_upgrade.state import GovernanceConfig, ProposalStatus, WorldState, ballot_key, state_root
from inplace_upgrade.storage import Mapping, Value, VariableDecl, assign_layout

A, R = Choice.APPROVE, Choice.REJECT
CONTRACT = "0x" + "cc" * 20
OUTSIDER = "0x" + "ee" * 20

OLD = assign_layout([VariableDecl("a", Value(16)), VariableDecl("b", Value(16)), VariableDecl("m", Mapping(Value(32)))])
NEW = assign_layout([VariableDecl("b", Value(16)), VariableDecl("a", Value(16)), VariableDecl("m", Mapping(Value(32)))])


def people(n):
    return [f"0x{i:02x}" + "00" * 19 for i in range(1, n + 1)]


class Chain:
    """Applies transactions and checks atomicity of every failure."""

    def __init__(self, n=5, k=3, d=2, timeout=50):
        self.members = people(n)
        self.gov = GovernanceConfig(frozenset(self.members), k, d, timeout)
        self.world = WorldState()
        self.send(Deploy(self.members[0], CONTRACT, b"\x01" * 10, OLD, self.gov), ok=True)

    def send(self, tx, ok=None):
        before_root = state_root(self.world)
        new, receipt = process_transaction(self.world, tx)
        if not receipt.ok:
            assert new is self.world
            assert state_root(new) == before_root
        if ok is not None:
            assert receipt.ok == ok, receipt.reason
        self.world = new
        return receipt

    @property
    def acct(self):
        return self.world.accounts[CONTRACT]

    def proposal(self, pid=0):
        return self.acct.proposals[pid]

    def propose(self, sender=None, block=None, ok=True):
        current = self.acct.layout
        target = NEW if current == OLD else OLD
        tx = Propose(sender or self.members[0], CONTRACT, b"\x02" * 12, target, diff_layouts(current, target), block=block)
        return self.send(tx, ok=ok)

    def vote(self, i, choice, halt=False, pid=0, block=None, ok=None):
        return self.send(Vote(self.members[i], CONTRACT, pid, choice, halt, block), ok=ok)


def expected_status(n, k, votes):
    """Reference tally: (accepted, status) after each vote."""
    approve = reject = 0
    status = "active"
    trace = []
    for choice in votes:
        if status != "active":
            trace.append((False, status))
            continue
        if choice is A:
            approve += 1
        else:
            reject += 1
        if approve >= k:
            status = "approved"
        elif reject > n - k:
            status = "rejected"
        trace.append((True, status))
    return trace


def check_tally(n):
    """Every approve/reject/abstain pattern for every threshold 1..n."""
    for k in range(1, n + 1):
        for ballot in itertools.product([None, A, R], repeat=n):
            chain = Chain(n, k, 1)
            chain.propose()
            votes = [(i, c) for i, c in enumerate(ballot) if c is not None]
            trace = expected_status(n, k, [c for _, c in votes])
            for (i, c), (accepted, status) in zip(votes, trace):
                chain.vote(i, c, ok=accepted)
                p = chain.proposal()
                assert p.status.label == status
                ballots = chain.acct.ballots(0)
                assert p.approve_count == sum(v[0] == A for _, v in ballots)
                assert p.reject_count == sum(v[0] == R for _, v in ballots)
                assert p.approve_count + p.reject_count <= n
            # single active proposal: a pending proposal blocks new ones
            pending = chain.proposal().status.pending
            chain.propose(sender=chain.members[-1], ok=not pending)
            assert chain.acct.active_proposal == (0 if pending else 1)


def check_threshold_boundary(n):
    for k in range(1, n + 1):
        chain = Chain(n, k, 1)
        chain.propose()
        for i in range(k - 1):
            chain.vote(i, A, ok=True)
            assert chain.proposal().status is ProposalStatus.ACTIVE
        chain.vote(k - 1, A, ok=True)
        assert chain.proposal().status is ProposalStatus.APPROVED
        assert chain.acct.active_proposal == 0


def check_rejection(n):
    for k in range(1, n + 1):
        chain = Chain(n, k, 1)
        chain.propose()
        for i in range(n - k):
            chain.vote(i, R, ok=True)
            assert chain.proposal().status is ProposalStatus.ACTIVE
        chain.vote(n - k, R, ok=True)
        assert chain.proposal().status is ProposalStatus.REJECTED
        assert chain.acct.active_proposal is None


def check_deactivation_gate(n):
    """Every halt pattern for every deactivation threshold 1..n."""
    for d in range(1, n + 1):
        for mask in range(1 << n):
            # approval threshold n keeps the proposal pending throughout
            chain = Chain(n, n, d)
            chain.propose()
            halts = 0
            for i in range(n):
                halt = bool(mask >> i & 1)
                chain.vote(i, A, halt=halt, ok=True)
                halts += halt
                assert chain.proposal().halt_count == halts
                assert chain.acct.ballot_trie.get(ballot_key(0, chain.members[i])) == bytes([1, int(halt)])
                r = chain.send(Execute(OUTSIDER, CONTRACT, (VarWrite("a", i + 1),)))
                assert r.ok == (halts < d), (d, mask, i)
            assert chain.proposal().status is ProposalStatus.APPROVED
            # once applied, the gate lifts
            chain.send(Apply(chain.members[0], CONTRACT, 0), ok=True)
            chain.send(Execute(OUTSIDER, CONTRACT, (VarWrite("a", 99),)), ok=True)


def check_expiry(timeout, start=5):
    chain = Chain(timeout=timeout)
    chain.send(Execute(OUTSIDER, CONTRACT, (), block=start), ok=True)
    chain.propose(block=start)
    # one block before the boundary the proposal still takes votes
    chain.vote(0, A, block=start + timeout - 1, ok=True)
    assert chain.proposal().status is ProposalStatus.ACTIVE
    # at the boundary it has expired; the failed vote rolls back, so probe lazily
    chain.vote(1, A, block=start + timeout, ok=False)
    probe = expire_check(chain.world.copy(), CONTRACT, start + timeout)
    assert probe.accounts[CONTRACT].proposals[0].status is ProposalStatus.EXPIRED
    # a new proposal is accepted and the old one is recorded as expired
    r = chain.propose(block=start + timeout)
    assert ("proposal_expired", {"id": 0}) in r.events
    assert chain.proposal(0).status is ProposalStatus.EXPIRED
    assert chain.acct.active_proposal == 1


def check_all(sizes=(3, 4, 5), timeouts=(1, 2, 7, 10)):
    for n in sizes:
        check_tally(n)
        check_threshold_boundary(n)
        check_rejection(n)
        check_deactivation_gate(n)
    for t in timeouts:
        check_expiry(t)
