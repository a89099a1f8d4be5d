"""Scenario files: scripted deploy/propose/vote/execute/apply runs with assertions.

A scenario is a JSON object::

    {
      "name": "SC1",
      "gas_schedule": {"sstore_set": 20000},          # optional overrides
      "contracts": [{"address": "0x..", "layout": "layouts/v1.json",
                     "code": "0x..", "governance": {...}}],
      "steps": [{"op": "deploy", "contract": "0x..", "sender": "0x.."}, ...]
    }

Layouts are either a path relative to the scenario file or an inline layout
description. Step ops: deploy, execute, propose, vote, apply, advance_blocks,
assert. Transaction steps may carry ``"expect": "failure"``.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .analyzer import ReorgPlan, diff_layouts, plan_stats, preserved_names
from .gas import GasSchedule, estimate_fresh_init, estimate_migration, overhead_percent
from .governance import (
    Apply,
    Choice,
    Deploy,
    Execute,
    MapWrite,
    Propose,
    Receipt,
    VarWrite,
    Vote,
    process_transaction,
)
from .hashing import from_hex, keccak256, to_hex
from .state import GovernanceConfig, ProposalStatus, WorldState, normalize_address, state_root, storage_root
from .storage import (
    Bool,
    Bytes,
    Descriptor,
    DynArray,
    FixedArray,
    LogicalValue,
    Mapping,
    StorageError,
    StorageLayout,
    layout_from_json,
    read_mapping_entry,
    read_var,
)

EXIT_OK, EXIT_ASSERTION, EXIT_PARSE = 0, 1, 2

CSV_COLUMNS = ["scenario", "n_vars", "n_reorgs", "reorg_gas", "fresh_init_gas", "migration_gas", "overhead_percent"]


ASSERTION_KINDS = ("variable_equals", "proposal_status", "reorg_count", "state_root_equals")


class ParseError(Exception):
    pass


class NoUpgradeInScenario(Exception):
    pass


def value_from_json(desc: Descriptor, obj) -> LogicalValue:
    """Convert a JSON literal into the logical value kind ``desc`` expects."""
    if isinstance(desc, Bool):
        return obj
    if isinstance(desc, Bytes):
        if isinstance(obj, str):
            return obj.encode()
        if isinstance(obj, dict) and "hex" in obj:
            return from_hex(obj["hex"])
        return obj
    if isinstance(desc, (FixedArray, DynArray)):
        return [_int(x) for x in obj] if isinstance(obj, list) else obj
    return _int(obj)


def value_to_json(value: LogicalValue):
    if isinstance(value, bytes):
        return {"hex": to_hex(value)}
    return value


def _int(obj):
    if isinstance(obj, str) and obj.startswith("0x"):
        return int(obj, 16)
    return obj


def _key(obj) -> int | bytes:
    if isinstance(obj, str):
        return from_hex(obj) if obj.startswith("0x") else obj.encode()
    return obj


@dataclass
class StepResult:
    index: int
    op: str
    receipt: Receipt | None = None
    passed: bool | None = None
    detail: str | None = None

    def to_json(self) -> dict:
        out: dict = {"index": self.index, "op": self.op}
        if self.receipt is not None:
            out["receipt"] = self.receipt.to_json()
        if self.passed is not None:
            out["passed"] = self.passed
        if self.detail is not None:
            out["detail"] = self.detail
        return out


@dataclass
class UpgradeSummary:
    contract: str
    proposal: int
    n_vars: int
    n_reorgs: int
    reorg_gas: int
    fresh_init_gas: int
    migration_gas: int
    reorg_refund: int = 0

    @property
    def reorg_effective_gas(self) -> int:
        """Reorganization gas after the refund cap (refund <= used / 5)."""
        return self.reorg_gas - min(self.reorg_refund, self.reorg_gas // 5)

    @property
    def overhead_percent(self) -> float:
        return overhead_percent(self.reorg_gas, self.fresh_init_gas)

    def to_json(self) -> dict:
        return {
            "contract": self.contract,
            "proposal": self.proposal,
            "n_vars": self.n_vars,
            "n_reorgs": self.n_reorgs,
            "reorg_gas": self.reorg_gas,
            "reorg_refund": self.reorg_refund,
            "reorg_effective_gas": self.reorg_effective_gas,
            "fresh_init_gas": self.fresh_init_gas,
            "migration_gas": self.migration_gas,
            "overhead_percent": round(self.overhead_percent, 4),
        }


@dataclass
class Report:
    scenario: str
    schedule: GasSchedule
    steps: list[StepResult] = field(default_factory=list)
    upgrades: list[UpgradeSummary] = field(default_factory=list)
    world: WorldState = field(default_factory=WorldState)

    @property
    def failures(self) -> list[StepResult]:
        return [s for s in self.steps if s.passed is False]

    @property
    def exit_code(self) -> int:
        return EXIT_ASSERTION if self.failures else EXIT_OK

    def to_json(self) -> dict:
        contracts = {}
        for addr in sorted(self.world.accounts):
            acct = self.world.accounts[addr]
            contracts[addr] = {
                "state_digest": to_hex(keccak256(acct.encode())),
                "code_digest": to_hex(acct.code_digest),
                "storage_root": to_hex(storage_root(acct.storage)),
                "layout_version": acct.layout_version,
            }
        checks = [s for s in self.steps if s.passed is not None]
        return {
            "scenario": self.scenario,
            "gas_schedule": self.schedule.to_json(),
            "steps": [s.to_json() for s in self.steps],
            "contracts": contracts,
            "state_root": to_hex(state_root(self.world)),
            "upgrades": [u.to_json() for u in self.upgrades],
            "assertions": {
                "passed": sum(1 for s in checks if s.passed),
                "failed": len(self.failures),
                "failures": [s.to_json() for s in self.failures],
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        lines = [f"scenario {self.scenario}"]
        for s in self.steps:
            if s.receipt is not None:
                r = s.receipt
                status = r.status if r.reason is None else f"{r.status} ({r.reason})"
                lines.append(f"  [{s.index:>3}] {s.op:<14} gas={r.gas_used:<8} {status}")
            elif s.passed is not None:
                mark = "PASS" if s.passed else "FAIL"
                lines.append(f"  [{s.index:>3}] {s.op:<14} {mark} {s.detail or ''}".rstrip())
            else:
                lines.append(f"  [{s.index:>3}] {s.op:<14} {s.detail or ''}".rstrip())
        for u in self.upgrades:
            lines.append(
                f"  upgrade {u.contract} #{u.proposal}: vars={u.n_vars} reorgs={u.n_reorgs} "
                f"reorg_gas={u.reorg_gas} fresh_init_gas={u.fresh_init_gas} "
                f"migration_gas={u.migration_gas} overhead={u.overhead_percent:.2f}%"
            )
        lines.append(f"  state_root {to_hex(state_root(self.world))}")
        lines.append(f"  assertions: {len(self.failures)} failed")
        return "\n".join(lines) + "\n"


class _Runner:
    def __init__(self, doc: dict, base: Path, schedule: GasSchedule) -> None:
        self.doc = doc
        self.base = base
        self.schedule = schedule
        self.world = WorldState()
        self.contracts: dict[str, dict] = {}
        for c in doc.get("contracts", []):
            addr = normalize_address(c["address"])
            self.contracts[addr] = {
                "layout": self.layout(c["layout"]),
                "code": from_hex(c.get("code", "0x")),
                "governance": GovernanceConfig.from_json(c["governance"]),
            }

    def layout(self, ref) -> StorageLayout:
        if isinstance(ref, str):
            with open(self.base / ref) as f:
                ref = json.load(f)
        return layout_from_json(ref)

    def contract(self, step: dict) -> str:
        addr = normalize_address(step["contract"])
        if addr not in self.contracts:
            raise ParseError(f"step references undeclared contract {addr}")
        return addr

    def current_layout(self, addr: str) -> StorageLayout:
        acct = self.world.accounts.get(addr)
        return acct.layout if acct is not None else self.contracts[addr]["layout"]

    def transaction(self, step: dict):
        op = step["op"]
        sender = step.get("sender", "0x" + "00" * 20)
        block = step.get("block")
        if op == "deploy":
            addr = self.contract(step)
            c = self.contracts[addr]
            return Deploy(sender, addr, c["code"], c["layout"], c["governance"], block)
        addr = self.contract(step)
        if op == "execute":
            layout = self.current_layout(addr)
            muts = []
            for m in step.get("mutations", []):
                desc = layout[m["name"]].descriptor
                if isinstance(desc, Mapping):
                    muts.append(MapWrite(m["name"], _key(m["key"]), _int(m["value"])))
                else:
                    muts.append(VarWrite(m["name"], value_from_json(desc, m["value"])))
            return Execute(sender, addr, tuple(muts), block)
        if op == "propose":
            new_layout = self.layout(step["layout"])
            dropped = frozenset(step.get("dropped", []))
            if "plan" in step:
                plan = ReorgPlan.from_json(step["plan"])
            else:
                # the off-chain analyzer prepares the plan on the proposer's side
                plan = diff_layouts(self.current_layout(addr), new_layout, dropped)
            return Propose(sender, addr, from_hex(step.get("code", "0x")), new_layout, plan, dropped, block)
        if op == "vote":
            choice = Choice[step.get("choice", "approve").upper()]
            return Vote(sender, addr, int(step["proposal"]), choice, bool(step.get("halt", False)), block)
        if op == "apply":
            return Apply(sender, addr, int(step["proposal"]), block)
        raise ParseError(f"unknown step op {op!r}")

    def check(self, step: dict) -> tuple[bool, str]:
        kind = step.get("kind")
        if kind not in ASSERTION_KINDS:
            raise ParseError(f"unknown assertion kind {kind!r}")
        if kind == "state_root_equals":
            got = to_hex(state_root(self.world))
            return got == step["hex"].lower(), f"state_root {got}"
        addr = self.contract(step)
        acct = self.world.accounts.get(addr)
        if acct is None:
            return False, f"{addr} is not deployed"
        if kind == "variable_equals":
            var = acct.layout[step["name"]]
            if isinstance(var.descriptor, Mapping):
                got = read_mapping_entry(acct.storage, acct.layout, var.name, _key(step["key"]))
                want = _int(step["value"])
            else:
                got = read_var(acct.storage, var)
                want = value_from_json(var.descriptor, step["value"])
            return got == want, f"{step['name']} = {value_to_json(got)!r}"
        proposal = acct.proposals.get(int(step["id"]))
        if proposal is None:
            return False, f"no proposal {step['id']}"
        if kind == "proposal_status":
            want = ProposalStatus[step["status"].upper()]
            return proposal.status is want, f"proposal {proposal.id} is {proposal.status.label}"
        n = plan_stats(proposal.plan)["total"]
        return n == int(step["n"]), f"proposal {proposal.id} plan has {n} instructions"

    def summarize(self, addr: str, proposal_id: int, before: WorldState, receipt: Receipt) -> UpgradeSummary:
        acct = before.accounts[addr]
        proposal = acct.proposals[proposal_id]
        old, new = acct.layout, proposal.new_layout
        keep = [n for n in preserved_names(old, new, proposal.dropped) if not isinstance(old[n].descriptor, Mapping)]
        values = {n: read_var(acct.storage, old[n]) for n in keep}
        reorg = next(data["reorg"] for tag, data in receipt.events if tag == "upgrade_applied")
        return UpgradeSummary(
            contract=addr,
            proposal=proposal_id,
            n_vars=len(new),
            n_reorgs=len(proposal.plan),
            reorg_gas=reorg["gas_used"],
            fresh_init_gas=estimate_fresh_init(new, values, self.schedule),
            migration_gas=estimate_migration(
                old, new, acct.storage, self.schedule, proposal.new_code, values, proposal.dropped
            ),
            reorg_refund=reorg["gas_refund"],
        )

    def run(self, name: str) -> Report:
        report = Report(name, self.schedule)
        steps = self.doc.get("steps")
        if not steps:
            raise ParseError("scenario has no steps")
        for i, step in enumerate(steps):
            op = step.get("op")
            if op == "advance_blocks":
                n = int(step.get("n", 1))
                if n < 0:
                    raise ParseError("advance_blocks needs n >= 0")
                self.world.block_number += n
                report.steps.append(StepResult(i, op, detail=f"block {self.world.block_number}"))
                continue
            if op == "assert":
                try:
                    passed, detail = self.check(step)
                except (StorageError, KeyError, ValueError) as exc:
                    passed, detail = False, f"{type(exc).__name__}: {exc}"
                report.steps.append(StepResult(i, f"assert:{step.get('kind')}", passed=passed, detail=detail))
                continue
            tx = self.transaction(step)
            before = self.world
            self.world, receipt = process_transaction(self.world, tx, self.schedule)
            result = StepResult(i, op, receipt)
            expect = step.get("expect")
            if expect is not None:
                result.passed = receipt.status == expect
                result.detail = f"expected {expect}"
            report.steps.append(result)
            if isinstance(tx, Apply) and receipt.ok:
                report.upgrades.append(self.summarize(normalize_address(tx.contract), tx.proposal_id, before, receipt))
        report.world = self.world
        return report


def load_scenario(path: str | Path) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read scenario {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: scenario must be a JSON object")
    return doc


def run_scenario(path: str | Path, schedule: GasSchedule | None = None) -> Report:
    """Run one scenario file. ``schedule`` overrides the file's own gas block."""
    path = Path(path)
    doc = load_scenario(path)
    try:
        if schedule is None:
            schedule = GasSchedule.from_overrides(doc.get("gas_schedule"))
        runner = _Runner(doc, path.parent, schedule)
        return runner.run(doc.get("name", path.stem))
    except ParseError:
        raise
    except (KeyError, ValueError, TypeError, OSError, StorageError) as exc:
        raise ParseError(f"{path}: {type(exc).__name__}: {exc}") from None


def scenario_paths(targets) -> list[Path]:
    out: list[Path] = []
    for t in targets:
        p = Path(t)
        out.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    return out


def bundled_scenarios() -> list[Path]:
    root = resources.files("inplace_upgrade") / "scenarios"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".json"))


@dataclass
class GasReport:
    rows: list[dict]

    @property
    def overheads(self) -> list[float]:
        return [r["overhead_percent"] for r in self.rows]

    def csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row)
        return buf.getvalue()

    def summary(self) -> dict:
        if not self.rows:
            return {"count": 0}
        o = self.overheads
        return {"count": len(o), "min": min(o), "max": max(o), "mean": statistics.fmean(o)}

    def render_summary(self) -> str:
        s = self.summary()
        if not s["count"]:
            return "no scenarios\n"
        return f"overhead over {s['count']} scenarios: min {s['min']:.2f}%  max {s['max']:.2f}%  mean {s['mean']:.2f}%\n"


def gas_report(paths, schedule: GasSchedule | None = None) -> GasReport:
    rows = []
    for path in paths:
        report = run_scenario(path, schedule)
        if len(report.upgrades) != 1:
            raise NoUpgradeInScenario(f"{path}: expected exactly one applied upgrade, found {len(report.upgrades)}")
        u = report.upgrades[0]
        rows.append(
            {
                "scenario": report.scenario,
                "n_vars": u.n_vars,
                "n_reorgs": u.n_reorgs,
                "reorg_gas": u.reorg_gas,
                "fresh_init_gas": u.fresh_init_gas,
                "migration_gas": u.migration_gas,
                "overhead_percent": round(u.overhead_percent, 4),
            }
        )
    return GasReport(rows)
