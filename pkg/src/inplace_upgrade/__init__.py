"""In-place smart-contract upgrades: storage layouts, reorganization plans,
trie-backed upgrade governance and opcode-mapped gas accounting."""

from .analyzer import ReorgPlan, diff_layouts, plan_stats, verify_plan
from .gas import GasMeter, GasSchedule, estimate_fresh_init, estimate_migration
from .governance import Apply, Choice, Deploy, Execute, MapWrite, Propose, Receipt, VarWrite, Vote, process_transaction
from .reorganizer import ReorgReceipt, apply_code_update, execute_plan
from .state import AuthTrie, ContractAccount, GovernanceConfig, WorldState, state_root
from .storage import (
    Bool,
    Bytes,
    DynArray,
    FixedArray,
    Mapping,
    StorageLayout,
    StorageMap,
    Value,
    VariableDecl,
    assign_layout,
    read_variable,
    write_variable,
)

__version__ = "0.1.0"

__all__ = [
    "Apply",
    "apply_code_update",
    "assign_layout",
    "AuthTrie",
    "Bool",
    "Bytes",
    "Choice",
    "ContractAccount",
    "Deploy",
    "diff_layouts",
    "DynArray",
    "estimate_fresh_init",
    "estimate_migration",
    "Execute",
    "execute_plan",
    "FixedArray",
    "GasMeter",
    "GasSchedule",
    "GovernanceConfig",
    "Mapping",
    "MapWrite",
    "plan_stats",
    "process_transaction",
    "Propose",
    "read_variable",
    "Receipt",
    "ReorgPlan",
    "ReorgReceipt",
    "state_root",
    "StorageLayout",
    "StorageMap",
    "Value",
    "VariableDecl",
    "VarWrite",
    "verify_plan",
    "Vote",
    "WorldState",
    "write_variable",
]
