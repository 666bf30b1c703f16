"""Finite instances of the structural definition, precondition matching and
the least instance on which every destructive operation applies."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

from .dsl import BlockSpec, Comparison, KnowledgeBase, Literal, OperationSpec, Theory
from .engine import model
from .heap import KEY_MAX, KEY_MIN, KEY_STEP, Binding, HeapState

__all__ = ["unfold_instances", "match_pre", "least_delta", "block_stage", "Delta",
           "DeltaNotFound", "fresh_key_candidates"]

DEFAULT_DEPTH = 4


class DeltaNotFound(Exception):
    def __init__(self, missing: list[str], depth: int):
        self.missing = missing
        self.depth = depth
        super().__init__(f"no instance up to depth {depth} admits: {', '.join(missing)}")


# ------------------------------------------------------------------ shapes

@lru_cache(maxsize=None)
def _binary_shapes(n: int) -> tuple:
    if n == 0:
        return (None,)
    out = []
    for left in range(n):
        for l in _binary_shapes(left):
            for r in _binary_shapes(n - 1 - left):
                out.append((l, r))
    return tuple(out)


@lru_cache(maxsize=None)
def _full_shapes(internal: int) -> tuple:
    if internal == 0:
        return ("leaf",)
    out = []
    for left in range(internal):
        for l in _full_shapes(left):
            for r in _full_shapes(internal - 1 - left):
                out.append((l, r))
    return tuple(out)


def _layout(shape, counter: list, edges: list) -> Optional[str]:
    """In-order numbering of a shape; returns the subtree's root id."""
    if shape is None:
        return None
    if shape == "leaf":
        counter[0] += 1
        return f"n{counter[0]}"
    left = _layout(shape[0], counter, edges)
    counter[0] += 1
    me = f"n{counter[0]}"
    right = _layout(shape[1], counter, edges)
    if left:
        edges.append((me, left, "left"))
    if right:
        edges.append((me, right, "right"))
    return me


def _sentinel_info(theory: Theory):
    sent = tuple(theory.sentinels.items())
    mins = [s for s, r in sent if r == "min"]
    maxs = [s for s, r in sent if r == "max"]
    terminal = maxs[0] if theory.shape == "chain" and maxs else None
    return sent, mins, maxs, terminal


def _candidates(theory: Theory, depth: int) -> Iterator[HeapState]:
    sent, mins, maxs, terminal = _sentinel_info(theory)
    skeys = {s: (KEY_MIN if r == "min" else KEY_MAX) for s, r in sent}
    if theory.shape == "chain":
        head, tail = mins[0], maxs[0]
        chain = [head] + [f"n{i}" for i in range(1, depth + 1)] + [tail]
        keys = {**skeys, **{f"n{i}": KEY_STEP * i for i in range(1, depth + 1)}}
        yield HeapState.build(keys, list(zip(chain, chain[1:])), sent, terminal)
        return
    root = (maxs or mins)[0]
    shapes = _binary_shapes(depth) if theory.shape == "tree" else _full_shapes(depth)
    for shape in shapes:
        counter, edges = [0], []
        top = _layout(shape, counter, edges)
        keys = {**skeys, **{f"n{i}": KEY_STEP * i for i in range(1, counter[0] + 1)}}
        if top is not None:
            edges.append((root, top, "left"))
        yield HeapState.build(keys, edges, sent, terminal)


def unfold_instances(theory: Theory, max_depth: int) -> list[HeapState]:
    """Instances ordered by the number of recursion unfoldings.

    Shapes are generated per depth and kept only when the structural root
    holds in their least model.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    out = []
    for depth in range(max_depth + 1):
        for st in _candidates(theory, depth):
            if (theory.root,) in model(theory, st):
                out.append(st)
    return out


# ------------------------------------------------------------ fresh keys

def fresh_key_candidates(state: HeapState, anchors: set[int]) -> list[int]:
    """Integer points inside existing key gaps, gaps nearest to an anchor
    first; within a gap the midpoint comes before the quarter points."""
    keys = sorted(set(state.key_map.values()) | {KEY_MIN, KEY_MAX})
    gaps = [(a, b) for a, b in zip(keys, keys[1:]) if b - a > 1]
    touching = [i for i, (a, b) in enumerate(gaps) if a in anchors or b in anchors]

    def rank(i):
        return (min((abs(i - j) for j in touching), default=0), i)

    out = []
    for i in sorted(range(len(gaps)), key=rank):
        a, b = gaps[i]
        for p in (a + (b - a) // 2, a + (b - a) // 4, a + 3 * (b - a) // 4):
            if a < p < b and p not in out:
                out.append(p)
    return out


def _solve_fresh(state, fresh_vars: list[str], cmps: list[Comparison], env: dict,
                 fixed: dict) -> Optional[dict]:
    anchors = set()
    for c in cmps:
        names = c.variables()
        if names & set(fresh_vars):
            for t in (c.left, c.right):
                if t.is_var and t.name in env and isinstance(env[t.name], int):
                    anchors.add(env[t.name])
                elif t.kind == "int":
                    anchors.add(t.name)
    pool = fresh_key_candidates(state, anchors)

    def value(t, e):
        return e.get(t.name) if t.is_var else t.name

    def consistent(e):
        for c in cmps:
            l, r = value(c.left, e), value(c.right, e)
            if l is None or r is None:
                continue
            if not (l == r if c.op == "=" else l < r):
                return False
        return True

    def options(v, e):
        if v in fixed:
            return [fixed[v]]
        eq = []
        for c in cmps:
            if c.op == "=":
                if c.left.is_var and c.left.name == v and value(c.right, e) is not None:
                    eq.append(value(c.right, e))
                if c.right.is_var and c.right.name == v and value(c.left, e) is not None:
                    eq.append(value(c.left, e))
        if eq:
            return eq[:1]
        taken = {e[x] for x in fresh_vars if x in e}
        return [p for p in pool if p not in taken]

    order = sorted(fresh_vars)

    def rec(i, e):
        if i == len(order):
            return e
        for val in options(order[i], e):
            e2 = {**e, order[i]: val}
            if consistent(e2):
                got = rec(i + 1, e2)
                if got is not None:
                    return got
        return None

    return rec(0, dict(env))


# -------------------------------------------------------------- matching

def _is_node_sym(term, theory: Theory) -> bool:
    return term.kind == "const" and term.name not in theory.constants()


def match_pre(op: OperationSpec, block: BlockSpec, state: HeapState, theory: Theory,
              fresh: frozenset = frozenset({"tau"}), fixed: Optional[dict] = None,
              fresh_ids: Optional[dict] = None) -> list[Binding]:
    """Every binding (one per window) under which the block's precondition
    holds in the least model of ``state``.

    ``fixed`` pins key variables of fresh symbols (e.g. the key to insert);
    otherwise they follow the midpoint-of-window policy.  Distinct node
    symbols bind distinct nodes.
    """
    fixed = fixed or {}
    m = model(theory, state)
    fresh_key_vars: dict[str, str] = {}
    joins: list[Literal] = []
    negs: list[Literal] = []
    for it in block.pre:
        if isinstance(it, Comparison):
            continue
        args = it.atom.args
        if it.atom.pred == "key" and args[0].kind == "const" and args[0].name in fresh:
            fresh_key_vars[args[0].name] = args[1].name
            continue
        (negs if it.negated else joins).append(it)
    cmps = block.comparisons()
    fresh_vars = list(fresh_key_vars.values())

    by_pred: dict[str, list] = {}
    by_first: dict[tuple, list] = {}
    for f in m:
        by_pred.setdefault(f[0], []).append(f)
        if len(f) > 1:
            by_first.setdefault((f[0], f[1]), []).append(f)
    joins = _pre_order(joins, theory)

    results: dict[tuple, Binding] = {}

    def unify(atom, fact, nodes, vals):
        nodes, vals = dict(nodes), dict(vals)
        for t, v in zip(atom.args, fact[1:]):
            if t.is_var:
                if t.name in vals and vals[t.name] != v:
                    return None
                vals[t.name] = v
            elif _is_node_sym(t, theory):
                if t.name in nodes:
                    if nodes[t.name] != v:
                        return None
                else:
                    if v in nodes.values() or not isinstance(v, str):
                        return None
                    nodes[t.name] = v
            elif t.name != v:
                return None
        return nodes, vals

    def check_cmps(vals, final=False):
        for c in cmps:
            vs = c.variables()
            if vs & set(fresh_vars):
                continue
            if not vs <= set(vals):
                if final:
                    return False
                continue
            l = vals[c.left.name] if c.left.is_var else c.left.name
            r = vals[c.right.name] if c.right.is_var else c.right.name
            if not (l == r if c.op == "=" else l < r):
                return False
        return True

    def finish(nodes, vals):
        if not check_cmps(vals, final=True):
            return
        solved = _solve_fresh(state, fresh_vars, cmps, vals, fixed)
        if solved is None:
            return
        ids = dict(fresh_ids or {})
        taken = set(nodes.values()) | set(ids.values())
        for sym in sorted(fresh):
            if sym in fresh_key_vars or any(_mentions(s, sym) for s in block.steps):
                if sym not in ids:
                    ids[sym] = state.fresh_id(taken)
                    taken.add(ids[sym])
        fk = {sym: solved[var] for sym, var in fresh_key_vars.items()}
        b = Binding.of({**nodes, **{s: ids[s] for s in ids if s in fk or s in fresh}},
                       solved, {s: fk[s] for s in fk})
        for lit in negs:
            if _holds_in(lit, b, m, theory):
                return
        key = tuple(sorted((s, n) for s, n in nodes.items()))
        if key not in results:
            results[key] = b

    def rec(i, nodes, vals):
        if i == len(joins):
            finish(nodes, vals)
            return
        lit = joins[i]
        a0 = lit.atom.args[0] if lit.atom.args else None
        if a0 is None:
            pool = by_pred.get(lit.atom.pred, ())
        elif a0.is_var:
            pool = (by_first.get((lit.atom.pred, vals[a0.name]), ()) if a0.name in vals
                    else by_pred.get(lit.atom.pred, ()))
        elif _is_node_sym(a0, theory):
            pool = (by_first.get((lit.atom.pred, nodes[a0.name]), ()) if a0.name in nodes
                    else by_pred.get(lit.atom.pred, ()))
        else:
            pool = by_first.get((lit.atom.pred, a0.name), ())
        for fact in pool:
            if len(fact) - 1 != lit.atom.arity:
                continue
            got = unify(lit.atom, fact, nodes, vals)
            if got is not None and check_cmps(got[1]):
                rec(i + 1, *got)

    rec(0, {}, {})
    return sorted(results.values(), key=lambda b: b.sort_key(state))


def _pre_order(joins: list[Literal], theory: Theory) -> list[Literal]:
    """Join order for precondition atoms: an atom whose first argument is
    already bound goes next, otherwise the first atom as written."""
    def names(lit):
        return {t.name for t in lit.atom.args if t.is_var or _is_node_sym(t, theory)}

    rest, out, bound = list(joins), [], set()
    while rest:
        pick = next((l for l in rest if l.atom.args and (l.atom.args[0].name in bound
                     or not (l.atom.args[0].is_var or _is_node_sym(l.atom.args[0], theory)))),
                    rest[0])
        rest.remove(pick)
        out.append(pick)
        bound |= names(pick)
    return out


def _mentions(step, sym) -> bool:
    return step.src.name == sym or step.dst.name == sym


def _holds_in(lit: Literal, b: Binding, m, theory) -> bool:
    from .engine import ground
    return ground(lit.atom, b, theory) in m


# -------------------------------------------------------------------- delta

@dataclass(frozen=True)
class Delta:
    state: HeapState
    bindings: dict  # op name -> (block id, Binding)
    depth_index: int

    def to_facts(self) -> str:
        return self.state.to_facts()


def applicable(kb: KnowledgeBase, op: OperationSpec, state: HeapState):
    for blk in op.blocks:
        if not blk.steps:
            continue
        bs = match_pre(op, blk, state, kb.theory, kb.fresh)
        if bs:
            return blk, bs[0]
    return None


def least_delta(kb: KnowledgeBase, max_depth: int = DEFAULT_DEPTH,
                ops: Optional[list[str]] = None) -> Delta:
    """First instance in unfolding order on which every destructive operation
    has a binding, with the least binding per operation."""
    wanted = [o for o in kb.destructive() if ops is None or o.name in ops]
    instances = unfold_instances(kb.theory, max_depth)
    best_missing = [o.name for o in wanted]
    for idx, st in enumerate(instances):
        chosen, missing = {}, []
        for op in wanted:
            got = applicable(kb, op, st)
            if got is None:
                missing.append(op.name)
            else:
                chosen[op.name] = (got[0].block_id, got[1])
        if not missing:
            return Delta(st, chosen, idx)
        if len(missing) < len(best_missing):
            best_missing = missing
    raise DeltaNotFound(best_missing, max_depth)


def block_stage(kb: KnowledgeBase, op: OperationSpec, block: BlockSpec, delta: Delta,
                max_depth: int = DEFAULT_DEPTH) -> tuple[HeapState, list[Binding]]:
    """Instance a block is analysed on: δ when the block applies there,
    otherwise the least later instance where it does."""
    bs = match_pre(op, block, delta.state, kb.theory, kb.fresh)
    if bs:
        return delta.state, bs
    for st in unfold_instances(kb.theory, max_depth)[delta.depth_index:]:
        bs = match_pre(op, block, st, kb.theory, kb.fresh)
        if bs:
            return st, bs
    raise DeltaNotFound([f"{op.name}/{block.block_id}"], max_depth)
