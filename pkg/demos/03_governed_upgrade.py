"""A layout upgrade has to get through a stakeholder vote first.

Deploys a contract with three stakeholders, proposes a new layout, shows a
halt vote suspending normal execution, then approves and applies it.
"""

from inplace_upgrade.analyzer import diff_layouts
from inplace_upgrade.governance import Apply, Choice, Deploy, Execute, Propose, VarWrite, Vote, process_transaction
from inplace_upgrade.hashing import to_hex
from inplace_upgrade.state import GovernanceConfig, WorldState, state_root
from inplace_upgrade.storage import Value, VariableDecl, assign_layout, read_variable

alice, bob, carol = ("0x" + c * 20 for c in ("a1", "b2", "c3"))
user = "0x" + "99" * 20
token = "0x" + "70" * 20

old = assign_layout([VariableDecl("rate", Value(8)), VariableDecl("cap", Value(8))])
new = assign_layout([VariableDecl("cap", Value(8)), VariableDecl("rate", Value(8)), VariableDecl("floor", Value(8))])
gov = GovernanceConfig(frozenset([alice, bob, carol]), approval_threshold=2, deactivation_threshold=1, proposal_timeout=100)

world = WorldState()


def send(tx, label):
    global world
    world, receipt = process_transaction(world, tx)
    note = "ok" if receipt.ok else receipt.reason
    print(f"{label:<34} {note:<45} root {to_hex(state_root(world))[:18]}..")
    return receipt


send(Deploy(alice, token, b"\x60\x00", old, gov), "deploy")
send(Execute(user, token, (VarWrite("rate", 5), VarWrite("cap", 900))), "user sets rate and cap")
send(Propose(alice, token, b"\x60\x01", new, diff_layouts(old, new)), "alice proposes new layout")
send(Vote(bob, token, 0, Choice.APPROVE, halt_execution=True), "bob approves and asks for a halt")
send(Execute(user, token, (VarWrite("rate", 6),)), "user tries to write while halted")
send(Vote(carol, token, 0, Choice.APPROVE), "carol approves")
send(Apply(alice, token, 0), "alice applies the upgrade")
send(Execute(user, token, (VarWrite("floor", 1),)), "user writes the new field")

acct = world.accounts[token]
print("\nlayout version", acct.layout_version)
for name in new.names:
    print(f"  {name} = {read_variable(acct.storage, acct.layout, name)}")
