"""Concurrent code generation: lock, validate, ordered update, unlock; or an
RCU recommendation naming the gate that failed."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .dsl import (BlockSpec, Comparison, KnowledgeBase, OperationSpec, Step, Term,
                  TraversalSpec)
from .heap import Binding, HeapState
from .instances import DEFAULT_DEPTH, Delta, block_stage, least_delta
from .interference import InterferenceModel, build_interference, window_symbols
from .tasks import (AdequacyReport, FalsifyReport, KeyMoveReport, ProgramOrderReport,
                    default_horizon, task1_unfalsify, task2_adequacy, task3_program_order,
                    task4_keymove)

SCHEMA_VERSION = 1
SUCCESS, RCU, UNCHANGED = "Success", "RCU", "Unchanged"
CAUSES = ("no-valid-order", "key-movement", "inadequate-locks")


@dataclass
class SynthConfig:
    horizon: Optional[int] = None  # None: block steps + 2
    guard: str = "protocol"
    heuristic: Optional[list[str]] = None  # explicit locks: symbols or heap nodes
    depth: int = DEFAULT_DEPTH
    ops: Optional[list[str]] = None


# ------------------------------------------------------------------ IR types

@dataclass(frozen=True)
class CodeIR:
    op: str
    block: str
    locks: tuple[str, ...]
    validate: tuple[str, ...]
    steps: tuple[tuple[int, Step], ...]  # (1-based index in the block, step)
    unlocks: tuple[str, ...]
    traversal: Optional[TraversalSpec] = None
    abort_on_validate_failure: bool = True

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "op": self.op, "block": self.block,
                "locks": list(self.locks), "validate": list(self.validate),
                "steps": [{"index": i, "src": str(s.src), "dst": str(s.dst),
                           "label": None if s.label is None else str(s.label)}
                          for i, s in self.steps],
                "unlocks": list(self.unlocks),
                "traversal": None if self.traversal is None else _traversal_dict(self.traversal),
                "abort_on_validate_failure": self.abort_on_validate_failure}

    @classmethod
    def from_dict(cls, d: dict, traversal: Optional[TraversalSpec] = None) -> "CodeIR":
        if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {d.get('schema_version')}")
        steps = tuple((s["index"], Step(_term(s["src"]), _term(s["dst"]),
                                        None if s["label"] is None else _term(s["label"])))
                      for s in d["steps"])
        return cls(d["op"], d["block"], tuple(d["locks"]), tuple(d["validate"]), steps,
                   tuple(d["unlocks"]), traversal, d.get("abort_on_validate_failure", True))


def _term(name: str) -> Term:
    return Term("var" if name[:1].isupper() else "const", name)


def _traversal_dict(t: TraversalSpec) -> dict:
    return {"op": t.op, "start": t.start, "descend": [_body(r) for r in t.descend]}


def _body(rule) -> str:
    return str(rule).split(":-", 1)[-1].strip().rstrip(".")


@dataclass
class RcuRecommendation:
    op: str
    block: str
    cause: str
    witness: Union[ProgramOrderReport, KeyMoveReport, AdequacyReport]

    def to_dict(self, theory=None) -> dict:
        w = self.witness
        return {"op": self.op, "block": self.block, "cause": self.cause,
                "witness": w.to_dict(theory) if not isinstance(w, ProgramOrderReport)
                else w.to_dict()}


@dataclass
class BlockResult:
    block: str
    start: HeapState
    binding: Binding
    falsify: FalsifyReport
    order: ProgramOrderReport
    adequacy: Optional[AdequacyReport]  # None: not evaluated (an earlier gate decided)
    outcome: Union[CodeIR, RcuRecommendation]


@dataclass
class OpResult:
    op: str
    outcome: str
    blocks: list[BlockResult] = field(default_factory=list)
    keymove: Optional[KeyMoveReport] = None
    code: Optional[CodeIR] = None  # unchanged operations: traversal only

    @property
    def codes(self) -> list[CodeIR]:
        return [b.outcome for b in self.blocks if isinstance(b.outcome, CodeIR)]

    @property
    def rcu(self) -> list[RcuRecommendation]:
        return [b.outcome for b in self.blocks if isinstance(b.outcome, RcuRecommendation)]


@dataclass
class SynthesisReport:
    name: str
    delta: Delta
    config: SynthConfig
    ops: dict[str, OpResult]
    theory: object = None

    @property
    def table(self) -> dict[str, str]:
        return {name: r.outcome for name, r in self.ops.items()}

    @property
    def degenerate(self) -> bool:
        return self.config.horizon == 0


# ------------------------------------------------------------------ assembly

def chain_comparisons(cmps: Sequence[Comparison]) -> list[str]:
    """Render ``a < b, b < c`` as ``a < b < c``; other comparisons as is."""
    chains: list[list] = []
    for c in cmps:
        if c.op == "<":
            for ch in chains:
                if ch[0] == "<" and ch[-1] == str(c.left):
                    ch += ["<", str(c.right)]
                    break
                if ch[0] == "<" and ch[1] == str(c.right):
                    ch[1:1] = [str(c.left), "<"]
                    break
            else:
                chains.append(["<", str(c.left), "<", str(c.right)])
        else:
            chains.append([c.op, str(c.left), c.op, str(c.right)])
    return [" ".join(ch[1:]) for ch in chains]


def validate_set(block: BlockSpec, unfalsify: Sequence[str], theory) -> list[str]:
    """Fluent conjuncts of pre outside Unfalsify, then the key comparisons."""
    fluents = [str(l) for l in block.literals() if l.atom.pred in theory.fluents]
    return [l for l in fluents if l not in set(unfalsify)] + chain_comparisons(block.comparisons())


def lock_order(block: BlockSpec, fresh, binding: Binding, start: HeapState,
               syms: Optional[Sequence[str]] = None) -> list[str]:
    """Lock symbols in ascending key order of the nodes they denote."""
    syms = list(window_symbols(block, fresh) if syms is None else syms)
    nodes = binding.node_map

    def key(s):
        n = nodes.get(s, s)
        return (start.key(n) if start.has_node(n) else 0, s)

    return sorted(syms, key=key)


def assemble(op: OperationSpec, block: BlockSpec, kb: KnowledgeBase, start: HeapState,
             binding: Binding, unfalsify: Sequence[str], order: Sequence[int],
             locks: Optional[Sequence[str]] = None) -> CodeIR:
    lk = tuple(lock_order(block, kb.fresh, binding, start, locks))
    steps = tuple((i, block.steps[i - 1]) for i in order)
    return CodeIR(op.name, block.block_id, lk, tuple(validate_set(block, unfalsify, kb.theory)),
                  steps, lk[::-1], kb.traversal())


def generate_concurrent_code(op: OperationSpec, kb: KnowledgeBase, delta: Delta,
                             config: Optional[SynthConfig] = None,
                             model_: Optional[InterferenceModel] = None) -> OpResult:
    """Per block: order gate, key-move gate (once per operation), lock gate;
    blocks passing all three get code.  Operations without steps are
    unchanged."""
    config = config or SynthConfig()
    model_ = model_ or build_interference(kb, config.guard)
    if not op.destructive:
        return OpResult(op.name, UNCHANGED,
                        code=CodeIR(op.name, "", (), (), (), (), kb.traversal()))
    staged = []
    for blk in op.blocks:
        if blk.steps:
            start, bindings = block_stage(kb, op, blk, delta, config.depth)
            staged.append((blk, start, bindings))
    keymove: Optional[KeyMoveReport] = None
    results = []
    for blk, start, bindings in staged:
        horizon = default_horizon(blk) if config.horizon is None else config.horizon
        falsify = task1_unfalsify(kb, op, blk, start, bindings, horizon, model_)
        order = task3_program_order(kb, op, blk, start, bindings[0])
        adequacy = None
        if not order.valid:
            outcome = RcuRecommendation(op.name, blk.block_id, "no-valid-order", order)
        else:
            if keymove is None and kb.traversal() is not None:
                starts = list(dict.fromkeys([delta.state] + [s for _, s, _ in staged]))
                keymove = task4_keymove(kb, op, starts, config.horizon, model_)
            if keymove is not None and keymove.keymove:
                outcome = RcuRecommendation(op.name, blk.block_id, "key-movement", keymove)
            else:
                syms, nodes = split_heuristic(config.heuristic, bindings[0])
                adequacy = task2_adequacy(kb, op, blk, start, bindings, syms, config.guard,
                                          horizon, model_, nodes)
                if not adequacy.adequate:
                    outcome = RcuRecommendation(op.name, blk.block_id, "inadequate-locks",
                                                adequacy)
                else:
                    locks = syms if syms is not None else (
                        nodes and _symbols_for(nodes, bindings[0]))
                    outcome = assemble(op, blk, kb, start, bindings[0], falsify.unfalsify,
                                       order.valid[0], locks or None)
        results.append(BlockResult(blk.block_id, start, bindings[0], falsify, order, adequacy,
                                   outcome))
    verdict = RCU if any(isinstance(r.outcome, RcuRecommendation) for r in results) else SUCCESS
    return OpResult(op.name, verdict, results, keymove)


def split_heuristic(names: Optional[Sequence[str]], binding: Binding
                    ) -> tuple[Optional[list[str]], Optional[list[str]]]:
    """Lock override as (symbols, nodes): names that are all knowledge
    symbols of the binding are symbols, anything else names heap nodes."""
    if names is None:
        return None, None
    syms = {s for s, _ in binding.nodes if s not in binding.fresh}
    if all(n in syms for n in names):
        return list(names), None
    return None, list(names)


def _symbols_for(nodes: Sequence[str], binding: Binding) -> list[str]:
    inv = {n: s for s, n in binding.nodes if s not in binding.fresh}
    return [inv.get(n, n) for n in nodes]


def synthesize(kb: KnowledgeBase, name: str = "", config: Optional[SynthConfig] = None,
               delta: Optional[Delta] = None) -> SynthesisReport:
    config = config or SynthConfig()
    delta = delta or least_delta(kb, config.depth)
    model_ = build_interference(kb, config.guard)
    ops = {}
    for op in kb.operations.values():
        if config.ops is not None and op.name not in config.ops:
            continue
        ops[op.name] = generate_concurrent_code(op, kb, delta, config, model_)
    return SynthesisReport(name, delta, config, ops, kb.theory)


# ------------------------------------------------------------------ rendering

def _assign(step: Step) -> str:
    label = "next" if step.label is None else str(step.label)
    return f"{step.src}.{label} := {step.dst}"


def render_text(ir: CodeIR) -> str:
    if not ir.steps:
        t = ir.traversal
        if t is None:
            return ""
        lines = [f"traverse from {t.start} {{"]
        lines += [f"  descend if {_body(r)}" for r in t.descend]
        return "\n".join(lines + ["}"]) + "\n"
    lines = [f"lock({s})" for s in ir.locks]
    lines.append(f"if validate({', '.join(ir.validate)}) {{")
    lines += [f"  {_assign(s)}" for _, s in ir.steps]
    lines.append("}")
    lines += [f"unlock({s})" for s in ir.unlocks]
    return "\n".join(lines) + "\n"


def render_op(result: OpResult) -> str:
    """All blocks of an operation, each under a header line."""
    if result.code is not None:
        return render_text(result.code)
    parts = []
    for b in result.blocks:
        head = f"# {result.op}/{b.block}"
        if isinstance(b.outcome, CodeIR):
            parts.append(f"{head}\n{render_text(b.outcome)}")
        else:
            parts.append(f"{head}\n# RCU: {b.outcome.cause}\n")
    return "\n".join(parts)


def report_dict(report: SynthesisReport) -> dict:
    th = report.theory
    ops = {}
    for name, r in report.ops.items():
        entry: dict = {"outcome": r.outcome}
        if r.keymove is not None:
            entry["keymove"] = r.keymove.to_dict(th)
        blocks = []
        for b in r.blocks:
            d = {"block": b.block, "start": b.start.to_dict(), "binding": b.binding.to_dict(),
                 "task1": b.falsify.to_dict(th), "task3": b.order.to_dict(),
                 "task2": "not evaluated" if b.adequacy is None else b.adequacy.to_dict(th)}
            if isinstance(b.outcome, CodeIR):
                d["code"] = b.outcome.to_dict()
            else:
                d["rcu"] = b.outcome.to_dict(th)
            blocks.append(d)
        entry["blocks"] = blocks
        ops[name] = entry
    cfg = report.config
    return {"schema_version": SCHEMA_VERSION, "name": report.name,
            "delta": report.delta.state.to_dict(),
            "delta_bindings": {op: {"block": blk, "binding": b.to_dict()}
                               for op, (blk, b) in report.delta.bindings.items()},
            "horizon": "steps+2" if cfg.horizon is None else cfg.horizon,
            "degenerate_horizon": report.degenerate, "guard": cfg.guard,
            "heuristic": cfg.heuristic, "depth": cfg.depth,
            "table": report.table, "ops": ops}


def render_report(report: SynthesisReport, path=None) -> str:
    text = json.dumps(report_dict(report), indent=2, sort_keys=False) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
