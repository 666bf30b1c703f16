"""Exhaustive interleaving of synthesized thread programs over a concrete
heap: mutual exclusion, the structural invariant, non-interference with
unfalsifiable and validated conjuncts, and linearizability of every final
state."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from .codegen import CodeIR
from .dsl import BlockSpec, KnowledgeBase, Literal, OperationSpec
from .engine import apply_step, holds, model
from .heap import Binding, HeapState
from .instances import match_pre
from .tasks import oracle_search

Schedule = tuple[int, ...]


class ScheduleError(ValueError):
    """A schedule picked a thread that cannot move."""


class BudgetExceeded(RuntimeError):
    def __init__(self, explored: int):
        self.explored = explored
        super().__init__(f"state budget exceeded after {explored} states")


@dataclass(frozen=True)
class ThreadProgram:
    """One operation call: the synthesized blocks of ``op`` tried in order,
    with ``key`` the argument (inserted or deleted key)."""

    tid: int
    op: OperationSpec
    key: int
    codes: tuple[tuple[BlockSpec, CodeIR], ...]
    unfalsify: tuple[tuple[str, tuple[str, ...]], ...] = ()  # block id -> conjuncts

    def fresh_ids(self, kb: KnowledgeBase) -> dict[str, str]:
        return {s: f"{s}{self.tid}" for s in sorted(kb.fresh)}

    @staticmethod
    def key_var(block: BlockSpec, kb: KnowledgeBase) -> Optional[str]:
        """Key variable of the fresh symbol: the operation's argument."""
        for lit in block.literals():
            a = lit.atom
            if a.pred == "key" and a.args[0].name == "tau":
                return a.args[1].name
        return None

    def unfalsify_of(self, block_id: str) -> tuple[str, ...]:
        return dict(self.unfalsify).get(block_id, ())

    def __str__(self) -> str:
        return f"T{self.tid}:{self.op.name}({self.key})"


@dataclass(frozen=True)
class ThreadState:
    pc: int = 0
    block: int = -1  # index into codes; -1 before resolution
    binding: Optional[Binding] = None
    aborted: bool = False
    halted: bool = False  # no window: finished as a no-op
    validated: bool = False


def micro_steps(ir: CodeIR) -> list[tuple]:
    out: list[tuple] = [("resolve",)]
    out += [("acquire", s) for s in ir.locks]
    out.append(("validate",))
    out += [("step", i) for i in range(len(ir.steps))]
    out += [("release", s) for s in ir.unlocks]
    return out


@dataclass
class Event:
    tid: int
    action: tuple
    detail: str = ""

    def describe(self) -> str:
        what = " ".join(map(str, self.action))
        return f"T{self.tid} {what}" + (f" ({self.detail})" if self.detail else "")


@dataclass
class Trace:
    states: list[HeapState]
    events: list[Event]
    threads: list[ThreadState]
    completed: list[tuple[int, str, int]]  # (tid, op, key) in completion order

    def to_dict(self) -> dict:
        return {"events": [e.describe() for e in self.events],
                "states": [s.to_dict() for s in self.states],
                "completed": [list(c) for c in self.completed]}


@dataclass
class Verdict:
    invariant_ok: bool = True
    mutual_exclusion_ok: bool = True
    linearizable: bool = True
    lemma1_ok: bool = True
    lemma2_ok: bool = True
    counterexample: Optional[dict] = None
    states: int = 0
    finals: int = 0
    complete: bool = True

    @property
    def ok(self) -> bool:
        return (self.invariant_ok and self.mutual_exclusion_ok and self.linearizable
                and self.lemma1_ok and self.lemma2_ok)

    def to_dict(self) -> dict:
        return {"invariant_ok": self.invariant_ok,
                "mutual_exclusion_ok": self.mutual_exclusion_ok,
                "linearizable": self.linearizable, "lemma1_ok": self.lemma1_ok,
                "lemma2_ok": self.lemma2_ok, "states": self.states, "finals": self.finals,
                "complete": self.complete, "counterexample": self.counterexample,
                "lemma_window": "validate-success through last step"}


# ------------------------------------------------------------------ machine

class Machine:
    """Deterministic executor shared by :func:`run_schedule` and
    :func:`explore`."""

    def __init__(self, kb: KnowledgeBase, programs: Sequence[ThreadProgram]):
        self.kb = kb
        self.theory = kb.theory
        self.programs = list(programs)
        self._steps = {}

    def steps(self, p: ThreadProgram, ts: ThreadState) -> list[tuple]:
        if ts.block < 0:
            return [("resolve",)]
        key = (p.tid, ts.block)
        if key not in self._steps:
            self._steps[key] = micro_steps(p.codes[ts.block][1])
        return self._steps[key]

    def done(self, p: ThreadProgram, ts: ThreadState) -> bool:
        return ts.halted or (ts.block >= 0 and ts.pc >= len(self.steps(p, ts)))

    def held(self, p: ThreadProgram, ts: ThreadState) -> set[str]:
        if ts.block < 0 or ts.halted:
            return set()
        nodes = ts.binding.node_map
        out = set()
        for act in self.steps(p, ts)[:ts.pc]:
            if act[0] == "acquire":
                out.add(nodes.get(act[1], act[1]))
            elif act[0] == "release":
                out.discard(nodes.get(act[1], act[1]))
        return out

    def runnable(self, i: int, threads: Sequence[ThreadState]) -> bool:
        p, ts = self.programs[i], threads[i]
        if self.done(p, ts):
            return False
        act = self.steps(p, ts)[ts.pc]
        if act[0] == "acquire":
            node = ts.binding.node_map.get(act[1], act[1])
            for j, (q, other) in enumerate(zip(self.programs, threads)):
                if j != i and node in self.held(q, other):
                    return False
        return True

    def resolve(self, p: ThreadProgram, state: HeapState) -> tuple[int, Optional[Binding]]:
        """Window of the call on the live heap: the first binding whose nodes
        include the node where a search for the key stops."""
        trav = self.kb.traversal()
        stop = oracle_search(self.theory, trav, state, p.key)[-1] if trav else None
        for idx, (blk, _) in enumerate(p.codes):
            var = ThreadProgram.key_var(blk, self.kb)
            fixed = {var: p.key} if var else {}
            for b in match_pre(p.op, blk, state, self.theory, self.kb.fresh, fixed=fixed,
                               fresh_ids=p.fresh_ids(self.kb)):
                if stop is None or stop in b.node_map.values():
                    return idx, b
        return -1, None

    def validate(self, p: ThreadProgram, ts: ThreadState, state: HeapState) -> bool:
        blk, ir = p.codes[ts.block]
        wanted = set(ir.validate)
        for lit in blk.literals():
            if str(lit) in wanted and not holds(lit, state, ts.binding, self.theory):
                return False
        return all(holds(c, state, ts.binding, self.theory) for c in blk.comparisons())

    def fire(self, i: int, threads: list[ThreadState], state: HeapState
             ) -> tuple[HeapState, ThreadState, Event]:
        p, ts = self.programs[i], threads[i]
        act = self.steps(p, ts)[ts.pc]
        if act[0] == "resolve":
            idx, b = self.resolve(p, state)
            if b is None:
                return state.tick(), ThreadState(halted=True), Event(p.tid, act, "no window")
            return state.tick(), ThreadState(1, idx, b), Event(p.tid, act, str(b))
        if act[0] == "acquire" or act[0] == "release":
            return state.tick(), _advance(ts), Event(p.tid, act)
        if act[0] == "validate":
            if self.validate(p, ts, state):
                return state.tick(), _advance(ts, validated=True), Event(p.tid, act, "ok")
            # abort: skip the update, release in reverse order
            steps = self.steps(p, ts)
            first = next(k for k, a in enumerate(steps) if a[0] == "release") \
                if any(a[0] == "release" for a in steps) else len(steps)
            return (state.tick(), ThreadState(first, ts.block, ts.binding, True),
                    Event(p.tid, act, "failed, abort"))
        _, ir = p.codes[ts.block]
        if ts.aborted:
            raise ScheduleError("aborted thread cannot run update steps")
        step = ir.steps[act[1]][1]
        return apply_step(state, step, ts.binding), _advance(ts), Event(p.tid, ("step", str(step)))


def _advance(ts: ThreadState, validated: Optional[bool] = None) -> ThreadState:
    return ThreadState(ts.pc + 1, ts.block, ts.binding, ts.aborted, ts.halted,
                       ts.validated if validated is None else validated)


def _completed(machine: Machine, threads: Sequence[ThreadState]) -> list[tuple[int, str, int]]:
    out = []
    for p, ts in zip(machine.programs, threads):
        if machine.done(p, ts) and not ts.aborted and not ts.halted:
            out.append((p.tid, p.op.name, p.key))
    return out


def run_schedule(kb: KnowledgeBase, programs: Sequence[ThreadProgram], start: HeapState,
                 schedule: Schedule) -> Trace:
    """Executes ``schedule`` (thread ids, one per micro-step)."""
    m = Machine(kb, programs)
    index = {p.tid: i for i, p in enumerate(programs)}
    threads = [ThreadState() for _ in programs]
    states, events, order = [start], [], []
    state = start
    for tid in schedule:
        if tid not in index:
            raise ScheduleError(f"unknown thread {tid}")
        i = index[tid]
        if not m.runnable(i, threads):
            raise ScheduleError(f"thread {tid} cannot move at step {len(events)}")
        state, threads[i], ev = m.fire(i, threads, state)
        states.append(state)
        events.append(ev)
        p = programs[i]
        if m.done(p, threads[i]) and not threads[i].aborted and not threads[i].halted:
            order.append((p.tid, p.op.name, p.key))
    return Trace(states, events, threads, order)


# ------------------------------------------------------------------ programs

def program_from_irs(kb: KnowledgeBase, tid: int, op: str, key: int,
                     irs: Sequence[CodeIR]) -> ThreadProgram:
    """Thread calling ``op(key)`` with the given block codes.  Unfalsify is
    read off each IR: the fluent conjuncts of pre it does not validate."""
    spec = kb.operations[op]
    blocks = {b.block_id: b for b in spec.blocks}
    codes, unf = [], []
    for ir in irs:
        if ir.op != op:
            continue
        blk = blocks[ir.block]
        codes.append((blk, ir))
        unf.append((blk.block_id, tuple(str(l) for l in blk.literals()
                                        if l.atom.pred in kb.theory.fluents
                                        and str(l) not in ir.validate)))
    return ThreadProgram(tid, spec, key, tuple(codes), tuple(unf))


def program(report, kb: KnowledgeBase, tid: int, op: str, key: int) -> ThreadProgram:
    """Thread calling ``op(key)`` with the synthesized code of every block
    that received code (RCU blocks are left out)."""
    return program_from_irs(kb, tid, op, key, report.ops[op].codes)


def default_calls(kb: KnowledgeBase, delta, ops: Sequence[str], threads: int = 2
                  ) -> list[tuple[str, int]]:
    """One call per operation in ``ops``, keyed as in its δ binding, cycled
    up to ``threads`` calls."""
    base = []
    for name in ops:
        if name not in delta.bindings:
            continue
        blk_id, b = delta.bindings[name]
        blk = next(x for x in kb.operations[name].blocks if x.block_id == blk_id)
        var = ThreadProgram.key_var(blk, kb)
        if var is not None and var in b.value_map:
            base.append((name, b.value_map[var]))
    return [base[i % len(base)] for i in range(threads)] if base else []


# ------------------------------------------------------------------ sequential replay

def apply_sequential(kb: KnowledgeBase, programs: Sequence[ThreadProgram], start: HeapState,
                     ops: Sequence[tuple[int, str, int]]) -> HeapState:
    """Runs the given calls one after another, each atomically."""
    by_tid = {p.tid: p for p in programs}
    m = Machine(kb, programs)
    state = start
    for tid, _, _ in ops:
        p = by_tid[tid]
        idx, b = m.resolve(p, state)
        if b is None:
            continue
        for _, step in p.codes[idx][1].steps:
            state = apply_step(state, step, b)
    return state


def linearization_exists(kb: KnowledgeBase, programs: Sequence[ThreadProgram], start: HeapState,
                         final: HeapState, completed: Sequence[tuple[int, str, int]]) -> bool:
    """Some order of the completed calls, run sequentially from ``start``,
    reaches the reachable part of ``final``."""
    want = final.canonical()
    return any(apply_sequential(kb, programs, start, perm).canonical() == want
               for perm in itertools.permutations(completed))


# ------------------------------------------------------------------ exploration

def _ground_lits(p: ThreadProgram, ts: ThreadState, names: Optional[set] = None) -> list[Literal]:
    blk = p.codes[ts.block][0]
    return [l for l in blk.literals() if names is None or str(l) in names]


def explore(kb: KnowledgeBase, programs: Sequence[ThreadProgram], start: HeapState,
            max_states: int = 200_000) -> Verdict:
    """Depth-first search over every schedule of ``programs`` from ``start``.

    Checked on every transition: the structural root, lock exclusivity,
    non-falsification of each active thread's Unfalsify conjuncts by other
    threads (``lemma1_ok``), and of its whole precondition between its
    successful validate and its last update step (``lemma2_ok``).  Every final state must be
    explained by a sequential order of the completed calls.
    """
    m = Machine(kb, programs)
    theory = kb.theory
    verdict = Verdict()
    seen: set = set()
    fluents = theory.fluents
    path_events: list[Event] = []
    path_states: list[HeapState] = [start]

    def fail(kind: str, msg: str):
        if verdict.counterexample is None:
            verdict.counterexample = {
                "violation": kind, "message": msg,
                "schedule": [e.tid for e in path_events],
                "events": [e.describe() for e in path_events],
                "states": [s.to_dict() for s in path_states]}
        setattr(verdict, kind, False)

    def active(p, ts):
        return ts.block >= 0 and not ts.halted and not m.done(p, ts)

    def lemma_lits(p, ts):
        """(lemma1 literals, lemma2 literals) currently protected."""
        blk = p.codes[ts.block][0]
        fl = [l for l in blk.literals() if l.atom.pred in fluents]
        unf = set(p.unfalsify_of(blk.block_id))
        l1 = [l for l in fl if str(l) in unf]
        steps = m.steps(p, ts)
        last = max((k for k, a in enumerate(steps) if a[0] == "step"), default=-1)
        in_window = ts.validated and not ts.aborted and ts.pc <= last
        return l1, (fl if in_window else [])

    def rec(state: HeapState, threads: tuple):
        key = (state, threads)
        if key in seen:
            return
        seen.add(key)
        verdict.states = len(seen)
        if len(seen) > max_states:
            verdict.complete = False
            raise BudgetExceeded(len(seen))
        movable = [i for i in range(len(programs)) if m.runnable(i, threads)]
        if not movable:
            if any(not m.done(p, ts) for p, ts in zip(programs, threads)):
                fail("mutual_exclusion_ok", "deadlock: no thread can move")
                return
            verdict.finals += 1
            done = _completed(m, threads)
            if not linearization_exists(kb, programs, start, state, done):
                fail("linearizable", f"no sequential order of {done} yields the final state")
            return
        for i in movable:
            lst = list(threads)
            nxt, lst[i], ev = m.fire(i, lst, state)
            path_events.append(ev)
            path_states.append(nxt)
            if (theory.root,) not in model(theory, nxt):
                fail("invariant_ok", f"{theory.root} fails after {ev.describe()}")
            owners: dict[str, int] = {}
            for p, ts in zip(programs, lst):
                for n in m.held(p, ts):
                    if n in owners:
                        fail("mutual_exclusion_ok", f"lock {n} held twice")
                    owners[n] = p.tid
            for j, (p, ts) in enumerate(zip(programs, threads)):
                if j == i or not active(p, ts):
                    continue
                l1, l2 = lemma_lits(p, ts)
                for lit in l1:
                    if holds(lit, state, ts.binding, theory) and \
                            not holds(lit, nxt, ts.binding, theory):
                        fail("lemma1_ok", f"{ev.describe()} falsifies {lit} of T{p.tid}")
                for lit in l2:
                    if not holds(lit, nxt, ts.binding, theory):
                        fail("lemma2_ok", f"{ev.describe()} falsifies {lit} of T{p.tid}")
            if lst[i].validated and not threads[i].validated:
                p = programs[i]
                for lit in _ground_lits(p, lst[i]):
                    if lit.atom.pred in fluents and not holds(lit, nxt, lst[i].binding, theory):
                        fail("lemma2_ok", f"{lit} of T{p.tid} false at validate")
            rec(nxt, tuple(lst))
            path_events.pop()
            path_states.pop()

    try:
        rec(start, tuple(ThreadState() for _ in programs))
    except BudgetExceeded:
        pass
    return verdict
