"""``cds``: synthesize, run the reasoning tasks, print δ, or explore
interleavings of generated code."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .codegen import (RCU, CodeIR, SynthConfig, render_op, render_report,
                      split_heuristic, synthesize)
from .dsl import BUNDLES, DSLError, KnowledgeBase, builtin_bundle, parse_knowledge, parse_theory
from .instances import DEFAULT_DEPTH, DeltaNotFound, block_stage, least_delta
from .interference import build_interference
from .oracle import default_calls, explore, program_from_irs
from .tasks import task1_unfalsify, task2_adequacy, task3_program_order, task4_keymove

EXIT_OK, EXIT_RCU, EXIT_PARSE, EXIT_INTERNAL, EXIT_COUNTEREXAMPLE = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    builtin: Optional[str] = None
    theory: Optional[str] = None
    knowledge: Optional[str] = None
    ops: Optional[list[str]] = None
    horizon: Optional[int] = None
    guard: str = "protocol"
    heuristic: Optional[list[str]] = None
    depth: int = DEFAULT_DEPTH
    out: Optional[str] = None
    threads: int = 2
    format: str = "text"
    ir: Optional[list[str]] = None
    calls: Optional[list[tuple[str, int]]] = None

    def __post_init__(self):
        if (self.builtin is None) == (self.theory is None or self.knowledge is None):
            raise ValueError("give either --builtin or both --theory and --knowledge")
        if self.builtin is not None and (self.theory or self.knowledge):
            raise ValueError("--builtin excludes --theory/--knowledge")

    @property
    def name(self) -> str:
        return self.builtin or Path(self.knowledge).stem.split(".")[0]

    def synth_config(self) -> SynthConfig:
        return SynthConfig(self.horizon, self.guard, self.heuristic, self.depth, self.ops)


def load(config: RunConfig) -> KnowledgeBase:
    if config.builtin is not None:
        return builtin_bundle(config.builtin)[1]
    theory = parse_theory(Path(config.theory).read_text())
    return parse_knowledge(Path(config.knowledge).read_text(), theory)


def _out_dir(config: RunConfig) -> Optional[Path]:
    if config.out is None:
        return None
    d = Path(config.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ------------------------------------------------------------------ commands

def cmd_synth(config: RunConfig) -> int:
    kb = load(config)
    report = synthesize(kb, config.name, config.synth_config())
    out = _out_dir(config)
    text = "".join(f"== {name}: {r.outcome}\n{render_op(r)}\n" for name, r in report.ops.items())
    if out is not None:
        render_report(report, out / "report.json")
        for name, r in report.ops.items():
            (out / f"{name}.txt").write_text(render_op(r))
            for ir in r.codes:
                (out / f"{name}.{ir.block}.ir.json").write_text(_dump(ir.to_dict()))
    if config.format == "structured":
        sys.stdout.write(render_report(report))
    else:
        sys.stdout.write(text)
    return EXIT_RCU if RCU in report.table.values() else EXIT_OK


def cmd_tasks(config: RunConfig) -> int:
    kb = load(config)
    th = kb.theory
    delta = least_delta(kb, config.depth)
    model_ = build_interference(kb, config.guard)
    reports: dict = {}
    for op in kb.operations.values():
        if config.ops is not None and op.name not in config.ops:
            continue
        entry: dict = {"blocks": []}
        if not op.destructive:
            entry["note"] = "no destructive steps"
            reports[op.name] = entry
            continue
        starts = [delta.state]
        for blk in op.blocks:
            if not blk.steps:
                continue
            start, bindings = block_stage(kb, op, blk, delta, config.depth)
            starts.append(start)
            syms, nodes = split_heuristic(config.heuristic, bindings[0])
            entry["blocks"].append({
                "block": blk.block_id, "start": start.to_dict(),
                "task1": task1_unfalsify(kb, op, blk, start, bindings, config.horizon,
                                         model_).to_dict(th),
                "task2": task2_adequacy(kb, op, blk, start, bindings, syms, config.guard,
                                        config.horizon, model_, nodes).to_dict(th),
                "task3": task3_program_order(kb, op, blk, start, bindings[0]).to_dict()})
        if kb.traversal() is not None:
            entry["task4"] = task4_keymove(kb, op, list(dict.fromkeys(starts)), config.horizon,
                                           model_).to_dict(th)
        reports[op.name] = entry
    doc = {"name": config.name, "delta": delta.state.to_dict(), "guard": config.guard,
           "horizon": "steps+2" if config.horizon is None else config.horizon,
           "degenerate_horizon": config.horizon == 0, "ops": reports}
    out = _out_dir(config)
    if out is not None:
        (out / "tasks.json").write_text(_dump(doc))
    sys.stdout.write(_dump(doc) if config.format == "structured" else _tasks_text(reports))
    return EXIT_OK


def _tasks_text(reports: dict) -> str:
    lines = []
    for name, entry in reports.items():
        for b in entry["blocks"]:
            t1, t2, t3 = b["task1"], b["task2"], b["task3"]
            lines.append(f"{name}/{b['block']}")
            flag = " (degenerate horizon)" if t1["degenerate"] else ""
            lines.append(f"  task1 unfalsify: {', '.join(t1['unfalsify']) or '-'}{flag}")
            for c in t1["conjuncts"]:
                lines.append(f"    {c['conjunct']}: {c['verdict']}")
            lines.append(f"  task2 locks {{{', '.join(t2['locks'])}}}: "
                         + ("adequate" if t2["adequate"] else f"inadequate ({t2['falsified']})"))
            lines.append("  task3 orders: " + (" ".join("<" + ",".join(map(str, o)) + ">"
                                                        for o in t3["valid"]) or "none"))
        if "task4" in entry:
            t4 = entry["task4"]
            extra = f" (missed {t4['missed_node']}, key {t4['key']})" if t4["keymove"] else ""
            lines.append(f"{name} task4 keymove: {str(t4['keymove']).lower()}{extra}")
        if "note" in entry:
            lines.append(f"{name}: {entry['note']}")
    return "\n".join(lines) + "\n"


def cmd_delta(config: RunConfig) -> int:
    kb = load(config)
    delta = least_delta(kb, config.depth, config.ops)
    if config.format == "structured":
        sys.stdout.write(_dump({"delta": delta.state.to_dict(), "facts": delta.to_facts(),
                                "bindings": {op: {"block": blk, "binding": b.to_dict()}
                                             for op, (blk, b) in delta.bindings.items()}}))
    else:
        sys.stdout.write(delta.to_facts().rstrip("\n") + "\n")
        for op, (blk, b) in delta.bindings.items():
            sys.stdout.write(f"% {op}/{blk}: {b}\n")
    return EXIT_OK


def cmd_oracle(config: RunConfig) -> int:
    kb = load(config)
    delta = least_delta(kb, config.depth)
    if config.ir:
        irs = []
        for path in config.ir:
            irs.append(CodeIR.from_dict(json.loads(Path(path).read_text()), kb.traversal()))
    else:
        report = synthesize(kb, config.name, config.synth_config(), delta)
        irs = [ir for r in report.ops.values() for ir in r.codes]
    ops = list(dict.fromkeys(ir.op for ir in irs))
    calls = config.calls if config.calls is not None else default_calls(kb, delta, ops,
                                                                        config.threads)
    programs = [program_from_irs(kb, i + 1, op, key, irs) for i, (op, key) in enumerate(calls)]
    verdict = explore(kb, programs, delta.state)
    doc = {"calls": [f"{op}({key})" for op, key in calls], **verdict.to_dict()}
    out = _out_dir(config)
    if out is not None:
        (out / "verdict.json").write_text(_dump(doc))
        if verdict.counterexample is not None:
            (out / "counterexample.json").write_text(_dump(verdict.counterexample))
    if config.format == "structured":
        sys.stdout.write(_dump(doc))
    else:
        sys.stdout.write(f"calls: {', '.join(doc['calls']) or '-'}\n")
        for k in ("invariant_ok", "mutual_exclusion_ok", "linearizable", "lemma1_ok",
                  "lemma2_ok"):
            sys.stdout.write(f"{k}: {str(doc[k]).lower()}\n")
        sys.stdout.write(f"states: {verdict.states}, final states: {verdict.finals}\n")
        if verdict.counterexample is not None:
            cx = verdict.counterexample
            sys.stdout.write(f"counterexample: {cx['message']}\n")
            sys.stdout.writelines(f"  {e}\n" for e in cx["events"])
    return EXIT_OK if verdict.ok else EXIT_COUNTEREXAMPLE


COMMANDS = {"synth": cmd_synth, "tasks": cmd_tasks, "delta": cmd_delta, "oracle": cmd_oracle}


# ------------------------------------------------------------------ argument parsing

def _csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _calls(text: str) -> list[tuple[str, int]]:
    out = []
    for item in _csv(text):
        op, _, key = item.partition(":")
        out.append((op, int(key)))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cds", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("synth", "synthesize concurrent code"),
                        ("tasks", "run the four reasoning tasks only"),
                        ("delta", "print the least instance δ"),
                        ("oracle", "explore all interleavings of generated code")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--builtin", choices=list(BUNDLES))
        p.add_argument("--theory")
        p.add_argument("--knowledge")
        p.add_argument("--op", type=_csv, dest="ops")
        p.add_argument("--horizon", type=int)
        p.add_argument("--guard", choices=["protocol", "literal"], default="protocol")
        p.add_argument("--heuristic", type=_csv)
        p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
        p.add_argument("--threads", type=int, default=2)
        p.add_argument("--out")
        p.add_argument("--format", choices=["text", "structured"], default="text")
        if name == "oracle":
            p.add_argument("--ir", nargs="+", help="code IR files (default: synthesize)")
            p.add_argument("--calls", type=_calls, help="op:key list, e.g. ins:15,del:10")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if k != "command"}
    try:
        config = RunConfig(**fields)
    except ValueError as exc:
        print(f"cds: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    try:
        return COMMANDS[args.command](config)
    except DSLError as exc:
        print(f"cds: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DeltaNotFound as exc:
        print(f"cds: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (OSError, KeyError, ValueError, RuntimeError) as exc:
        print(f"cds: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
