"""Falsification (Task 1), lock adequacy (Task 2), program order (Task 3)
and key movement (Task 4)."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .dsl import BlockSpec, KnowledgeBase, Literal, OperationSpec, Theory, TraversalSpec
from .engine import (ActionEvent, Trajectory, apply_step, ground, holds, model, renamed_model,
                     search)
from .heap import Binding, HeapState, natural
from .interference import InterferenceModel, build_interference, window_heuristic, window_symbols

__all__ = [
    "ConjunctVerdict", "FalsifyReport", "AdequacyReport", "ProgramOrderReport",
    "KeyMoveReport", "task1_unfalsify", "task2_adequacy", "task3_program_order",
    "task4_keymove", "window_heuristic", "default_horizon", "fluent_conjuncts",
    "traverse_step", "oracle_search", "default_invariant",
]


def default_horizon(block: BlockSpec) -> int:
    return len(block.steps) + 2


def fluent_conjuncts(block: BlockSpec, theory: Theory) -> list[Literal]:
    """Time-dependent conjuncts of the precondition; key literals and
    comparisons are static and never falsifiable."""
    return [l for l in block.literals() if l.atom.pred in theory.fluents]


def _is_fact(lit: Literal, binding: Binding, theory: Theory) -> bool:
    if lit.negated:
        return False
    g = ground(lit.atom, binding, theory)
    return any(r.is_fact and (r.head.pred, *(t.name for t in r.head.args)) == g
               for r in theory.rules)


def _bound_nodes(binding: Binding) -> set[str]:
    fr = binding.fresh
    return {n for s, n in binding.nodes if s not in fr}


def normalizing(theory: Theory, successors, keep: set[str]):
    """Successor function over normalized states; falsification of literals
    about ``keep`` is invariant under the normalization."""
    def succ(state):
        for event, nxt in successors(state):
            image, ren = nxt.normalized(keep)
            if ren:
                renamed_model(theory, nxt, ren, image)
            yield event, image
    return succ


# ------------------------------------------------------------------ Task 1

@dataclass
class ConjunctVerdict:
    literal: Literal
    falsifiable: bool
    witness: Optional[Trajectory] = None
    binding: Optional[Binding] = None
    reason: str = "search"  # "search" | "fact" | "horizon"

    def to_dict(self, theory=None) -> dict:
        out = {"conjunct": str(self.literal),
               "verdict": "falsifiable" if self.falsifiable else "unfalsifiable",
               "reason": self.reason}
        if self.binding is not None:
            out["binding"] = self.binding.to_dict()
        if self.witness is not None:
            out["witness"] = self.witness.to_dict(theory)
        return out


@dataclass
class FalsifyReport:
    op: str
    block: str
    verdicts: list[ConjunctVerdict]
    horizon: int
    degenerate: bool = False

    @property
    def unfalsify(self) -> list[str]:
        return [str(v.literal) for v in self.verdicts if not v.falsifiable]

    def verdict(self, literal: str) -> ConjunctVerdict:
        for v in self.verdicts:
            if str(v.literal) == literal:
                return v
        raise KeyError(literal)

    def to_dict(self, theory=None) -> dict:
        return {"op": self.op, "block": self.block, "horizon": self.horizon,
                "degenerate": self.degenerate, "unfalsify": self.unfalsify,
                "conjuncts": [v.to_dict(theory) for v in self.verdicts]}


def task1_unfalsify(kb: KnowledgeBase, op: OperationSpec, block: BlockSpec, start: HeapState,
                    bindings: Sequence[Binding], horizon: Optional[int] = None,
                    model_: Optional[InterferenceModel] = None) -> FalsifyReport:
    """Which fluent conjuncts of ``pre`` unlocked interference can falsify.

    A conjunct is falsifiable when, for some binding of the block on
    ``start``, a trajectory of at most ``horizon`` ticks makes its ground
    instance true at one tick and false at the next.
    """
    theory = kb.theory
    horizon = default_horizon(block) if horizon is None else horizon
    model_ = model_ or build_interference(kb)
    out = []
    for lit in fluent_conjuncts(block, theory):
        verdict = None
        for b in bindings:
            if _is_fact(lit, b, theory):
                continue

            def goal(prev, event, nxt, lit=lit, b=b):
                return holds(lit, prev, b, theory) and not holds(lit, nxt, b, theory)

            keep = _bound_nodes(b)
            w = search(start.normalized(keep)[0], normalizing(theory, model_.successors(), keep),
                       horizon, goal)
            if w is not None:
                verdict = ConjunctVerdict(lit, True, w, b)
                break
        if verdict is None:
            facts = bool(bindings) and all(_is_fact(lit, b, theory) for b in bindings)
            reason = "fact" if facts else ("horizon" if horizon == 0 else "search")
            verdict = ConjunctVerdict(lit, False, None, None, reason)
        out.append(verdict)
    return FalsifyReport(op.name, block.block_id, out, horizon, horizon == 0)


# ------------------------------------------------------------------ Task 2

@dataclass
class AdequacyReport:
    op: str
    block: str
    locks: list[str]
    adequate: bool
    guard: str
    horizon: int
    witness: Optional[Trajectory] = None
    falsified: Optional[str] = None
    binding: Optional[Binding] = None
    lock_nodes: Optional[list[str]] = None

    def to_dict(self, theory=None) -> dict:
        out = {"op": self.op, "block": self.block, "locks": self.locks,
               "adequate": self.adequate, "guard": self.guard, "horizon": self.horizon}
        if not self.adequate:
            out["falsified"] = self.falsified
            out["binding"] = self.binding.to_dict()
            out["lock_nodes"] = self.lock_nodes
            out["witness"] = self.witness.to_dict(theory)
        return out


def task2_adequacy(kb: KnowledgeBase, op: OperationSpec, block: BlockSpec, start: HeapState,
                   bindings: Sequence[Binding], locks: Optional[Sequence[str]] = None,
                   guard: str = "protocol", horizon: Optional[int] = None,
                   model_: Optional[InterferenceModel] = None,
                   lock_nodes: Optional[Sequence[str]] = None) -> AdequacyReport:
    """Whether holding ``locks`` (knowledge symbols; default: the window
    heuristic) keeps every fluent pre conjunct unfalsifiable under
    lock-guarded interference, for every binding on ``start``.

    ``lock_nodes`` names heap nodes to hold instead of symbols.
    """
    theory = kb.theory
    horizon = default_horizon(block) if horizon is None else horizon
    model_ = model_ or build_interference(kb, guard)
    if lock_nodes is not None:
        syms = [str(n) for n in lock_nodes]
    else:
        syms = list(window_symbols(block, kb.fresh) if locks is None else locks)
    conj = fluent_conjuncts(block, theory)
    for b in bindings:
        nodes = b.node_map
        held = (frozenset(lock_nodes) if lock_nodes is not None
                else frozenset(nodes.get(s, s) for s in syms if s not in b.fresh))
        lits = [l for l in conj if not _is_fact(l, b, theory)]
        hit: list = []

        def goal(prev, event, nxt):
            for l in lits:
                if holds(l, prev, b, theory) and not holds(l, nxt, b, theory):
                    hit.append(l)
                    return True
            return False

        keep = _bound_nodes(b) | held
        w = search(start.normalized(keep)[0], normalizing(theory, model_.successors(held, guard), keep),
                   horizon, goal)
        if w is not None:
            return AdequacyReport(op.name, block.block_id, syms, False, guard, horizon, w,
                                  str(hit[0]), b, sorted(held))
    return AdequacyReport(op.name, block.block_id, syms, True, guard, horizon)


# ------------------------------------------------------------------ Task 3

@dataclass
class OrderRejection:
    order: tuple[int, ...]
    tick: int
    state: HeapState
    reason: str

    def to_dict(self) -> dict:
        return {"order": list(self.order), "tick": self.tick, "reason": self.reason,
                "state": self.state.to_dict()}


@dataclass
class ProgramOrderReport:
    op: str
    block: str
    valid: list[tuple[int, ...]]
    rejected: list[OrderRejection] = field(default_factory=list)

    def rejection(self, order) -> OrderRejection:
        for r in self.rejected:
            if r.order == tuple(order):
                return r
        raise KeyError(order)

    def to_dict(self) -> dict:
        return {"op": self.op, "block": self.block, "valid": [list(o) for o in self.valid],
                "rejected": [r.to_dict() for r in self.rejected]}


Invariant = Callable[[Theory, HeapState, HeapState, BlockSpec, Binding], Optional[str]]


def default_invariant(theory: Theory, initial: HeapState, state: HeapState, block: BlockSpec,
                      binding: Binding) -> Optional[str]:
    """Structural root holds and no node reachable initially becomes
    unreachable, except nodes the postcondition removes."""
    m = model(theory, state)
    if (theory.root,) not in m:
        return f"{theory.root} fails"
    allowed = set()
    for lit in block.post:
        if lit.negated and lit.atom.pred == "reach":
            allowed.add(ground(lit.atom, binding, theory)[1])
    before = {f[1] for f in model(theory, initial) if f[0] == "reach"}
    lost = sorted(n for n in before - allowed if ("reach", n) not in m)
    if lost:
        return "unreachable: " + ", ".join(lost)
    return None


def task3_program_order(kb: KnowledgeBase, op: OperationSpec, block: BlockSpec,
                        start: HeapState, binding: Binding,
                        invariant: Invariant = default_invariant) -> ProgramOrderReport:
    """Permutations of the block's steps that keep the invariant at every
    intermediate state and establish the postcondition.  Orders are 1-based
    step indices; the original order is listed first when valid."""
    theory = kb.theory
    n = len(block.steps)
    valid, rejected = [], []
    for perm in itertools.permutations(range(1, n + 1)):
        st, bad = start, None
        for t, idx in enumerate(perm, 1):
            st = apply_step(st, block.steps[idx - 1], binding)
            why = invariant(theory, start, st, block, binding)
            if why is not None:
                bad = OrderRejection(perm, t, st, why)
                break
        if bad is None:
            failed = [str(l) for l in block.post if not holds(l, st, binding, theory)]
            if failed:
                bad = OrderRejection(perm, n, st, "post fails: " + ", ".join(failed))
        if bad is None:
            valid.append(perm)
        else:
            rejected.append(bad)
    return ProgramOrderReport(op.name, block.block_id, valid, rejected)


# ------------------------------------------------------------------ Task 4

def _compiled_descend(trav: TraversalSpec):
    from .engine import _CompiledRule
    rules = trav.__dict__.get("_compiled")
    if rules is None:
        rules = [_CompiledRule(r, bound=("X", "K")) for r in trav.descend]
        object.__setattr__(trav, "_compiled", rules)
    return rules


def traverse_step(theory: Theory, trav: TraversalSpec, state: HeapState, node: str,
                  target: int) -> Optional[str]:
    """One dereference from ``node`` while searching ``target``; ``None``
    when the traversal stops at ``node``."""
    from .engine import _solve
    memo = trav.__dict__.get("_step_memo")
    if memo is None or len(memo) > 200_000:
        memo = {}
        object.__setattr__(trav, "_step_memo", memo)
    key = (state, node, target)
    if key not in memo:
        facts = model(theory, state)
        nxt = {env["Y"] for rule in _compiled_descend(trav)
               for env in _solve(rule, facts, 0, {"X": node, "K": target})}
        memo[key] = min(nxt, key=natural) if nxt else None
    return memo[key]


def oracle_search(theory: Theory, trav: TraversalSpec, state: HeapState, target: int,
                  limit: int = 256) -> list[str]:
    """Instantaneous traversal: the nodes visited on a frozen ``state``."""
    node, seen = trav.start, [trav.start]
    for _ in range(limit):
        node = traverse_step(theory, trav, state, node, target)
        if node is None or node in seen:
            break
        seen.append(node)
    return seen


def _oracle_finds(theory, trav, state, k) -> bool:
    memo = trav.__dict__.get("_oracle_memo")
    if memo is None or len(memo) > 200_000:
        memo = {}
        object.__setattr__(trav, "_oracle_memo", memo)
    if (state, k) not in memo:
        memo[(state, k)] = any(state.key(n) == k for n in oracle_search(theory, trav, state, k))
    return memo[(state, k)]


@dataclass
class KeyMoveReport:
    op: str
    keymove: bool
    horizon: int
    witness: Optional[Trajectory] = None
    missed_node: Optional[str] = None
    key: Optional[int] = None
    visited: Optional[list[str]] = None
    moved_to: Optional[str] = None

    def to_dict(self, theory=None) -> dict:
        out = {"op": self.op, "keymove": self.keymove, "horizon": self.horizon}
        if self.keymove:
            out.update(missed_node=self.missed_node, moved_to=self.moved_to, key=self.key,
                       visited=self.visited, witness=self.witness.to_dict(theory))
        return out


class MissingTraversal(ValueError):
    pass


def _present(theory, state, k) -> bool:
    return ("present", k) in model(theory, state)


def _holder(theory, state: HeapState, k: int) -> Optional[str]:
    m = model(theory, state)
    for n, kk in state.keys:
        if kk == k and ("reach", n) in m:
            return n
    return None


def task4_keymove(kb: KnowledgeBase, op: OperationSpec, starts: Sequence[HeapState],
                  horizon: Optional[int] = None, model_: Optional[InterferenceModel] = None,
                  step_limit: int = 64) -> KeyMoveReport:
    """Search for a key that ``op`` moves past an asynchronous traversal.

    From each start state, ``op`` may interfere for up to ``horizon`` ticks
    in total, before the traversal starts or between two of its reads (one
    dereference per tick).  A key move is reported when the searched key is
    present at every tick of the traversal window, the instantaneous
    traversal finds it on some state of the window, and the asynchronous
    traversal ends without visiting it.
    """
    trav = kb.traversal()
    if trav is None:
        raise MissingTraversal("knowledge base has no traversal")
    theory = kb.theory
    if horizon is None:
        horizon = max((default_horizon(b) for b in op.blocks if b.steps), default=2)
    env = (model_ or build_interference(kb)).restricted([op.name])

    def act(heap, a):
        nxt = env.apply(heap, a)
        image, ren = nxt.normalized()
        if ren:
            renamed_model(theory, nxt, ren, image)
        return image, ren

    # search node: (heap, phase); phase is None before the traversal starts,
    # else (target, cursor, oracle_seen).  The best remaining budget per node
    # is kept: more budget admits every behaviour of less.
    best: dict = {}
    parents: dict = {}
    frontier: deque = deque()
    for st in starts:
        node = (st.normalized()[0], None)
        if node not in best:
            best[node], parents[node] = horizon, None
            frontier.append((node, horizon, 0))

    def push(node, budget, ev, parent, steps):
        if best.get(node, -1) >= budget:
            return False
        best[node] = budget
        parents[node] = (parent, ev)
        frontier.append((node, budget, steps))
        return True

    while frontier:
        node, budget, steps = frontier.popleft()
        if best[node] > budget:
            continue
        heap, phase = node
        if phase is None:
            if budget > 0:
                for a in env.enabled(heap):
                    push((act(heap, a)[0], None), budget - 1,
                         ActionEvent("interference", a), node, 0)
            # without budget the traversal coincides with the instantaneous one
            keys = {k for n, k in heap.keys if n not in heap.sentinel_names} if budget else ()
            for k in sorted(keys):
                if _present(theory, heap, k):
                    ev = ActionEvent("traverse", f"start search for key {k}", "self")
                    seen = _oracle_finds(theory, trav, heap, k)
                    push((heap, (k, trav.start, seen)), budget, ev, node, 0)
            continue
        k, cur, seen = phase
        if budget == 0:
            # frozen heap from here on: walk to the end in one go
            path = _walk(theory, trav, heap, cur, k, step_limit - steps)
            if seen and path is not None:
                traj, st = _rebuild_search(parents, node), heap
                for a, b in zip((cur,) + path, path):
                    st = st.tick()
                    traj = traj.extend(ActionEvent("traverse", f"deref {a} -> {b}", "self"), st)
                return KeyMoveReport(op.name, True, horizon, traj, _origin(starts, traj, k),
                                     k, _visited(parents, node) + list(path),
                                     _holder(theory, heap, k))
            continue
        nxt = traverse_step(theory, trav, heap, cur, k)
        if nxt is None or steps >= step_limit or heap.key(nxt) == k:
            continue
        read = f"deref {cur} -> {nxt}"
        options = [(ActionEvent("traverse", read, "self"), (heap.tick(), {}), budget)]
        if budget > 0:
            options += [(ActionEvent("traverse", f"{read}; interference: {a}", "self"),
                         act(heap, a), budget - 1) for a in env.enabled(heap)]
        for ev, (h2, ren), b2 in options:
            if not _present(theory, h2, k):
                continue
            s2 = seen or _oracle_finds(theory, trav, h2, k)
            at = ren.get(nxt, nxt)
            child = (h2, (k, at, s2))
            if not push(child, b2, ev, node, steps + 1):
                continue
            if s2 and traverse_step(theory, trav, h2, at, k) is None and h2.key(at) != k:
                traj = _rebuild_search(parents, child)
                return KeyMoveReport(op.name, True, horizon, traj, _origin(starts, traj, k), k,
                                     _visited(parents, child), _holder(theory, h2, k))
    return KeyMoveReport(op.name, False, horizon)


def _walk(theory, trav, heap, cur, k, limit) -> Optional[tuple[str, ...]]:
    """Remaining reads of a traversal at ``cur`` on a frozen heap; ``None``
    when it finds ``k`` (or runs past ``limit``), else the nodes read."""
    path = []
    while len(path) < limit:
        nxt = traverse_step(theory, trav, heap, cur, k)
        if nxt is None:
            return tuple(path)
        if heap.key(nxt) == k:
            return None
        path.append(nxt)
        cur = nxt
    return None


def _origin(starts, traj: Trajectory, k: int) -> Optional[str]:
    """Node holding ``k`` when the traversal started."""
    for ev, st in zip(traj.events, traj.states[1:]):
        if ev.kind == "traverse" and str(ev.payload).startswith("start"):
            return next((n for n, kk in st.keys if kk == k), None)
    return None


def _visited(parents, node) -> list[str]:
    out = []
    while node is not None and node[1] is not None:
        out.append(node[1][1])
        node = parents[node][0]
    return out[::-1]


def _rebuild_search(parents, node) -> Trajectory:
    chain = []
    while parents[node] is not None:
        prev, ev = parents[node]
        chain.append((ev, node[0]))
        node = prev
    traj = Trajectory((node[0],))
    for ev, st in reversed(chain):
        traj = traj.extend(ev, st)
    return traj
