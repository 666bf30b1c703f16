"""Environment interference: complete destructive operations performed
instantaneously on arbitrary windows, optionally guarded by held locks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .dsl import BlockSpec, KnowledgeBase, OperationSpec, Step
from .engine import ActionEvent, apply_step, resolve
from .engine import model as engine_model
from .heap import Binding, HeapState
from .instances import match_pre

GUARD_MODES = ("protocol", "literal")
EDGE_PREDICATES = ("edge", "child")


def window_symbols(block: BlockSpec, fresh: Iterable[str] = ("tau",)) -> list[str]:
    """Symbols of the heuristic lock window of ``block``.

    Endpoints of precondition edges that a step redirects, nodes a step
    modifies, and nodes the postcondition makes unreachable.  Fresh symbols
    are thread-local and never part of a window.
    """
    fresh = set(fresh)
    out: list[str] = []

    def add(name):
        if name not in fresh and name not in out:
            out.append(name)

    for lit in block.literals():
        a = lit.atom
        if lit.negated or a.pred not in EDGE_PREDICATES:
            continue
        src, dst = a.args[0], a.args[1]
        label = a.args[2] if a.pred == "child" else None
        for s in block.steps:
            if s.src != src:
                continue
            if a.pred == "child" and s.label is not None and s.label != label:
                continue
            if s.dst == dst:
                continue
            add(src.name)
            add(dst.name)
    for s in block.steps:
        add(s.src.name)
    for lit in block.post:
        if lit.negated and lit.atom.pred == "reach":
            add(lit.atom.args[0].name)
    return [s for s in out if not s[:1].isupper()]


def window_heuristic(op: OperationSpec, block: BlockSpec, binding: Binding,
                     fresh: Iterable[str] = ("tau",)) -> frozenset[str]:
    """Nodes of the lock window under ``binding``."""
    nodes = binding.node_map
    return frozenset(nodes[s] for s in window_symbols(block, fresh) if s in nodes)


@dataclass(frozen=True)
class InterferenceAction:
    op: str
    block: str
    binding: Binding
    effects: tuple[Step, ...]
    window: frozenset
    enabled_effects: Optional[tuple[int, ...]] = None  # None: all effects

    def active_effects(self) -> tuple[Step, ...]:
        if self.enabled_effects is None:
            return self.effects
        return tuple(self.effects[i] for i in self.enabled_effects)

    def modified(self) -> list[str]:
        return [resolve(s.src, self.binding) for s in self.effects]

    def __str__(self) -> str:
        part = "" if self.enabled_effects is None else f" effects{list(self.enabled_effects)}"
        return f"interfere({self.op}/{self.block}, {self.binding}){part}"


@dataclass
class InterferenceModel:
    kb: KnowledgeBase
    templates: tuple[tuple[OperationSpec, BlockSpec], ...]
    guard: str = "protocol"
    only_ops: Optional[frozenset] = None

    def restricted(self, ops: Iterable[str]) -> "InterferenceModel":
        """Same actions, filtered to ``ops``; shares the ground-action caches."""
        out = InterferenceModel(self.kb, self.templates, self.guard, frozenset(ops))
        out.__dict__["_ground_cache"] = self.__dict__.setdefault("_ground_cache", {})
        out.__dict__["_applied"] = self.__dict__.setdefault("_applied", {})
        return out

    def enabled(self, state: HeapState, locks=frozenset(), guard: Optional[str] = None):
        return enabled_actions(self, state, locks, guard or self.guard)

    def apply(self, state: HeapState, action: InterferenceAction) -> HeapState:
        if action.enabled_effects is None:
            res = self.__dict__.get("_applied", {}).get((state, action))
            if res is not None:
                return HeapState(res.keys, res.succ, res.sentinels, res.terminal, state.clock + 1)
        return apply_action(state, action)

    def successors(self, locks=frozenset(), guard: Optional[str] = None):
        def succ(state):
            for act in self.enabled(state, locks, guard):
                yield ActionEvent("interference", act), self.apply(state, act)
        return succ


def build_interference(kb: KnowledgeBase, guard: str = "protocol") -> InterferenceModel:
    """One action template per destructive block; membership adds nothing."""
    if guard not in GUARD_MODES:
        raise ValueError(f"guard must be one of {GUARD_MODES}")
    templates = tuple((op, blk) for op in kb.operations.values() for blk in op.blocks
                      if blk.steps)
    return InterferenceModel(kb, templates, guard)


def ground_actions(model: InterferenceModel, state: HeapState) -> list[InterferenceAction]:
    cache = model.__dict__.setdefault("_ground_cache", {})
    applied = model.__dict__.setdefault("_applied", {})
    got = cache.get(state)
    if got is None:
        got = []
        theory = model.kb.theory
        for op, blk in model.templates:
            for b in match_pre(op, blk, state, theory, model.kb.fresh):
                act = InterferenceAction(op.name, blk.block_id, b, blk.steps,
                                         window_heuristic(op, blk, b, model.kb.fresh))
                # environment operations are correct: they keep the structure well formed
                res = apply_action(state, act)
                if (theory.root,) in engine_model(theory, res):
                    got.append(act)
                    applied[(state, act)] = res
        got.sort(key=lambda a: (a.op, a.block, a.binding.sort_key(state)))
        if len(cache) > 100_000:
            cache.clear()
            applied.clear()
        cache[state] = got
    return got


def enabled_actions(model: InterferenceModel, state: HeapState, locks=frozenset(),
                    guard: str = "protocol") -> list[InterferenceAction]:
    """Ground actions whose precondition holds and whose guard admits them.

    ``protocol``: the whole action is disabled when its window meets a held
    lock.  ``literal``: each effect is disabled when the node it modifies is
    locked; an action survives with the remaining effects.
    """
    if guard not in GUARD_MODES:
        raise ValueError(f"guard must be one of {GUARD_MODES}")
    locks = frozenset(locks)
    out = []
    for act in ground_actions(model, state):
        if model.only_ops is not None and act.op not in model.only_ops:
            continue
        if not locks:
            out.append(act)
        elif guard == "protocol":
            if not (act.window & locks):
                out.append(act)
        else:
            keep = tuple(i for i, n in enumerate(act.modified()) if n not in locks)
            if len(keep) == len(act.effects):
                out.append(act)
            elif keep:
                out.append(InterferenceAction(act.op, act.block, act.binding, act.effects,
                                              act.window, keep))
    return out


IDLE_ACTION = None


def apply_action(state: HeapState, action: Optional[InterferenceAction]) -> HeapState:
    """All enabled effects of ``action`` in a single tick; ``None`` idles."""
    if action is None:
        return state.tick()
    for step in action.active_effects():
        state = apply_step(state, step, action.binding, tick=False)
    return state.tick()
