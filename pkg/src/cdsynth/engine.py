"""Stratified least-model evaluation over heap states, link effects and
bounded trajectory enumeration."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Union

from .dsl import NIL, Atom, Comparison, Literal, Rule, Step, Term, Theory, strata
from .heap import Binding, HeapState

Fact = tuple  # (pred, *args)

_CACHE_LIMIT = 200_000


# ----------------------------------------------------------------- compiling

def _cterm(t: Term):
    return ("v", t.name) if t.is_var else ("c", t.name)


def _join_order(atoms: list[Atom], first: Optional[int], bound) -> list[Atom]:
    """Greedy join order: atoms whose first argument is already bound come
    next, then atoms sharing a bound variable, then the rest as written."""
    rest = list(atoms)
    out = []
    if first is not None:
        out.append(rest.pop(first))
    bound = set(bound).union(*(a.variables() for a in out))
    while rest:
        pick = next((a for a in rest if a.args and (not a.args[0].is_var
                                                    or a.args[0].name in bound)), None)
        if pick is None:
            pick = next((a for a in rest if a.variables() & bound), rest[0])
        rest.remove(pick)
        out.append(pick)
        bound |= pick.variables()
    return out


class _CompiledRule:
    __slots__ = ("head", "pos", "neg", "checks")

    def __init__(self, rule: Rule, first: Optional[int] = None, bound=()):
        atoms = _join_order(list(rule.pos), first, bound)
        self.head = (rule.head.pred, tuple(_cterm(t) for t in rule.head.args))
        self.pos = [(a.pred, tuple(_cterm(t) for t in a.args)) for a in atoms]
        self.neg = [(a.pred, tuple(_cterm(t) for t in a.args)) for a in rule.neg]
        # comparisons are checked as soon as the atoms binding them are joined
        bound = set(bound)
        self.checks: list[list] = []
        pending = list(rule.cmps)
        for a in atoms:
            bound |= a.variables()
            now = [c for c in pending if c.variables() <= bound]
            pending = [c for c in pending if c not in now]
            self.checks.append([(c.op, _cterm(c.left), _cterm(c.right)) for c in now])
        if pending and self.checks:
            self.checks[-1] += [(c.op, _cterm(c.left), _cterm(c.right)) for c in pending]
        elif pending:
            self.checks.append([(c.op, _cterm(c.left), _cterm(c.right)) for c in pending])


def _join_source(rule: "_CompiledRule", delta_first: bool) -> str:
    """Python source of a nested-loop join for ``rule``.

    The function takes the full store and, when ``delta_first``, the delta
    store read by the first body atom; it returns the derived head tuples.
    """
    # the one-shot loop gives ``continue`` a target in loop-free bodies
    lines = ["def join(P, F, DP):", "    out = []", "    for _ in (0,):"]
    bound: set = set()
    ind = "        "

    def ref(t):
        return f"v_{t[1]}" if t[0] == "v" else repr(t[1])

    for i, (pred, args) in enumerate(rule.pos):
        store = "DP" if (delta_first and i == 0) else "P"
        if store == "P" and all(t[0] == "c" or t[1] in bound for t in args):
            tup = ", ".join([repr(pred)] + [ref(t) for t in args])
            lines.append(f"{ind}if ({tup},) in P.get({pred!r}, ()):")
            ind += "    "
        else:
            first = args[0] if args else None
            indexed = store == "P" and first is not None and (first[0] == "c" or first[1] in bound)
            src = f"F.get(({pred!r}, {ref(first)}), ())" if indexed else f"{store}.get({pred!r}, ())"
            lines.append(f"{ind}for t{i} in {src}:")
            ind += "    "
            for j, t in enumerate(args):
                if indexed and j == 0:
                    continue
                if t[0] == "c" or t[1] in bound:
                    lines.append(f"{ind}if t{i}[{j + 1}] != {ref(t)}: continue")
                else:
                    lines.append(f"{ind}v_{t[1]} = t{i}[{j + 1}]")
                    bound.add(t[1])
        for op, l, r in rule.checks[i] if i < len(rule.checks) else ():
            test = "==" if op == "=" else "<"
            lines.append(f"{ind}if not ({ref(l)} {test} {ref(r)}): continue")
    for pred, args in rule.neg:
        tup = ", ".join([repr(pred)] + [ref(t) for t in args])
        lines.append(f"{ind}if ({tup},) in P.get({pred!r}, ()): continue")
    head = ", ".join([repr(rule.head[0])] + [ref(t) for t in rule.head[1]])
    lines.append(f"{ind}out.append(({head},))")
    lines.append("    return out")
    return "\n".join(lines)


def _join_fn(rule: "_CompiledRule", delta_first: bool):
    ns: dict = {}
    exec(_join_source(rule, delta_first), ns)
    return ns["join"]


def _compiled(theory: Theory) -> list[tuple[set, list]]:
    """Per stratum: its head predicates and, per rule, the full join plus one
    delta-first join for every body atom over a head of the same stratum."""
    comp = theory.__dict__.get("_compiled")
    if comp is None:
        comp = []
        for layer in strata(theory):
            heads = {r.head.pred for r in layer}
            rules = [(_join_fn(_CompiledRule(r), False),
                      [_join_fn(_CompiledRule(r, j), True)
                       for j, a in enumerate(r.pos) if a.pred in heads])
                     for r in layer]
            comp.append((heads, rules))
        theory.__dict__["_compiled"] = comp
    return comp


def _val(term, env):
    return env[term[1]] if term[0] == "v" else term[1]


def _compare(op, a, b) -> bool:
    if op == "=":
        return a == b
    return a < b


class _Facts:
    """Fact store indexed by predicate and by (predicate, first argument)."""

    def __init__(self):
        self.by_pred: dict[str, set] = {}
        self.by_first: dict[tuple, list] = {}

    def add(self, fact: Fact) -> bool:
        s = self.by_pred.setdefault(fact[0], set())
        if fact in s:
            return False
        s.add(fact)
        if len(fact) > 1:
            self.by_first.setdefault((fact[0], fact[1]), []).append(fact)
        return True

    def __contains__(self, fact: Fact) -> bool:
        return fact in self.by_pred.get(fact[0], ())

    def __bool__(self) -> bool:
        return any(self.by_pred.values())

    def __iter__(self):
        for facts in self.by_pred.values():
            yield from facts

    def __len__(self) -> int:
        return sum(map(len, self.by_pred.values()))

    def candidates(self, pred, args, env):
        if args and (args[0][0] == "c" or args[0][1] in env):
            return self.by_first.get((pred, _val(args[0], env)), ())
        return self.by_pred.get(pred, ())


def _unify(args, fact, env):
    new = None
    for t, v in zip(args, fact[1:]):
        if t[0] == "c":
            if t[1] != v:
                return None
        else:
            cur = env.get(t[1], _MISSING) if new is None else new.get(t[1], _MISSING)
            if cur is _MISSING:
                if new is None:
                    new = dict(env)
                new[t[1]] = v
            elif cur != v:
                return None
    return env if new is None else new


_MISSING = object()


def _solve(rule: _CompiledRule, facts: _Facts, i: int, env: dict,
           delta: Optional[_Facts] = None, di: int = -1) -> Iterator[dict]:
    """Joins the positive body from atom ``i`` on; atom ``di`` reads only
    ``delta`` (semi-naive evaluation)."""
    if i == len(rule.pos):
        for pred, args in rule.neg:
            if (pred, *(_val(t, env) for t in args)) in facts:
                return
        yield env
        return
    pred, args = rule.pos[i]
    src = delta if i == di else facts
    for fact in list(src.candidates(pred, args, env)):
        if len(fact) - 1 != len(args):
            continue
        env2 = _unify(args, fact, env)
        if env2 is None:
            continue
        if all(_compare(op, _val(l, env2), _val(r, env2)) for op, l, r in rule.checks[i]):
            yield from _solve(rule, facts, i + 1, env2, delta, di)


def base_facts(theory: Theory, state: HeapState) -> set[Fact]:
    out: set[Fact] = set()
    for a, label, b in state.succ:
        out.add(("edge", a, b))
        if theory.labelled:
            out.add(("child", a, b, label))
    for n, k in state.keys:
        out.add(("key", n, k))
    return out


def _least_model(theory: Theory, base: set[Fact]) -> _Facts:
    facts = _Facts()
    for f in base:
        facts.add(f)
    P, F = facts.by_pred, facts.by_first
    for heads, rules in _compiled(theory):
        delta = _Facts()
        for full, _ in rules:
            for f in full(P, F, None):
                if facts.add(f):
                    delta.add(f)
        while delta:
            new = _Facts()
            for _, variants in rules:
                for join in variants:
                    for f in join(P, F, delta.by_pred):
                        if facts.add(f):
                            new.add(f)
            delta = new
    return facts


def _cache(theory: Theory) -> dict:
    c = theory.__dict__.get("_derive_cache")
    if c is None or len(c) > _CACHE_LIMIT:
        c = {}
        theory.__dict__["_derive_cache"] = c
    return c


def model(theory: Theory, state: HeapState) -> _Facts:
    """Base facts of ``state`` together with every derived atom, as an
    indexed store supporting ``in`` and iteration.  Treat it as read-only."""
    cache = _cache(theory)
    m = cache.get(state)
    if m is None:
        m = cache[state] = _least_model(theory, base_facts(theory, state))
    return m


def renamed_model(theory: Theory, state: HeapState, ren: dict[str, str], image: HeapState) -> None:
    """Seeds the model cache of ``image``, the copy of ``state`` with nodes
    renamed by ``ren``; renaming nodes is an isomorphism of least models."""
    cache = _cache(theory)
    if image in cache:
        return
    r = lambda v: ren.get(v, v) if isinstance(v, str) else v
    facts = _Facts()
    for f in model(theory, state):
        facts.add((f[0], *map(r, f[1:])))
    cache[image] = facts


def derive(theory: Theory, state: HeapState) -> frozenset:
    """Derived atoms (rule heads) of the least model of ``state``."""
    derived = theory.derived
    return frozenset(f for f in model(theory, state) if f[0] in derived)


# ---------------------------------------------------------------- literals

class UnboundSymbol(ValueError):
    pass


def resolve(term: Term, binding: Binding, theory: Optional[Theory] = None):
    if term.kind == "int":
        return term.name
    if term.is_var:
        vals = binding.value_map
        if term.name not in vals:
            raise UnboundSymbol(f"unbound variable {term.name}")
        return vals[term.name]
    nodes = binding.node_map
    if term.name in nodes:
        return nodes[term.name]
    if term.sentinel or term.name == NIL or (theory is not None and term.name in theory.constants()):
        return term.name
    raise UnboundSymbol(f"unbound node symbol {term.name}")


def ground(atom: Atom, binding: Binding, theory: Optional[Theory] = None) -> Fact:
    return (atom.pred, *(resolve(t, binding, theory) for t in atom.args))


def holds(item: Union[Literal, Comparison], state: HeapState, binding: Binding,
          theory: Theory) -> bool:
    """Truth of a literal or key comparison under ``binding`` in ``state``."""
    if isinstance(item, Comparison):
        return _compare(item.op, resolve(item.left, binding, theory),
                        resolve(item.right, binding, theory))
    fact = ground(item.atom, binding, theory)
    if fact[0] == "key" and not state.has_node(fact[1]):
        k = binding.fresh_key(fact[1])
        present = k is not None and k == fact[2]
    else:
        present = fact in model(theory, state)
    return present != item.negated


# ------------------------------------------------------------------ effects

class StepError(ValueError):
    pass


def step_label(step: Step, binding: Binding) -> str:
    if step.label is None:
        return "next"
    if step.label.is_var:
        return str(resolve(step.label, binding))
    return str(step.label.name)


def apply_step(state: HeapState, step: Step, binding: Binding, tick: bool = True) -> HeapState:
    """Replace the modified node's outgoing edge (for the step's label).

    Fresh nodes named by the binding are allocated on first use with their
    planned keys.  Every other edge and every key persists.
    """
    try:
        a = resolve(step.src, binding)
        b = resolve(step.dst, binding)
    except UnboundSymbol as e:
        raise StepError(str(e)) from None
    if a == NIL:
        raise StepError("cannot link from nil")
    if state.terminal is not None and a == state.terminal:
        raise StepError(f"cannot modify the terminal sentinel {a}")
    for n in (a, b):
        if n != NIL and not state.has_node(n):
            k = binding.fresh_key(n)
            if k is None:
                raise StepError(f"node {n} is neither in the heap nor fresh")
            state = state.with_node(n, k)
    state = state.with_successor(a, step_label(step, binding), None if b == NIL else b)
    return state.tick() if tick else state


# ------------------------------------------------------------- trajectories

@dataclass(frozen=True)
class ActionEvent:
    kind: str  # "interference" | "program-step" | "idle" | "traverse"
    payload: object = None
    actor: str = "environment"

    def describe(self) -> str:
        if self.kind == "idle":
            return "idle"
        return f"{self.kind}: {self.payload}"


IDLE = ActionEvent("idle", None, "environment")


@dataclass(frozen=True)
class TimedState:
    state: HeapState
    derived: frozenset = field(compare=False, repr=False, default=frozenset())

    @classmethod
    def of(cls, theory: Theory, state: HeapState) -> "TimedState":
        return cls(state, derive(theory, state))


@dataclass(frozen=True)
class Trajectory:
    states: tuple[HeapState, ...]
    events: tuple[ActionEvent, ...] = ()

    def __post_init__(self):
        if len(self.states) != len(self.events) + 1:
            raise ValueError("a trajectory has one more state than events")

    @property
    def last(self) -> HeapState:
        return self.states[-1]

    def extend(self, event: ActionEvent, state: HeapState) -> "Trajectory":
        return Trajectory(self.states + (state,), self.events + (event,))

    def timed(self, theory: Theory) -> list[TimedState]:
        return [TimedState.of(theory, s) for s in self.states]

    def to_dict(self, theory: Optional[Theory] = None) -> dict:
        out = {"events": [e.describe() for e in self.events],
               "states": [s.to_dict() for s in self.states]}
        if theory is not None:
            deltas = []
            for a, b in zip(self.states, self.states[1:]):
                da, db = derive(theory, a), derive(theory, b)
                deltas.append({"added": sorted(_fmt(f) for f in db - da),
                               "removed": sorted(_fmt(f) for f in da - db)})
            out["derived_deltas"] = deltas
        return out


def _fmt(f: Fact) -> str:
    return f[0] if len(f) == 1 else f"{f[0]}({','.join(map(str, f[1:]))})"


def trajectories(start: HeapState, model_, horizon: int, locks=frozenset(),
                 guard: str = "protocol") -> Iterator[Trajectory]:
    """Every trajectory of exactly ``horizon`` ticks; each tick is idle or one
    enabled interference action.  Idle comes first, then actions in model
    order."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")

    def rec(traj: Trajectory, left: int):
        if left == 0:
            yield traj
            return
        s = traj.last
        yield from rec(traj.extend(IDLE, s.tick()), left - 1)
        for act in model_.enabled(s, locks, guard):
            nxt = model_.apply(s, act)
            yield from rec(traj.extend(ActionEvent("interference", act), nxt), left - 1)

    yield from rec(Trajectory((start,)), horizon)


def satisfiable(condition: Callable[[Trajectory], bool], enumerator) -> Optional[Trajectory]:
    """First trajectory satisfying ``condition``; ``None`` means the
    enumeration entails its negation."""
    for traj in enumerator:
        if condition(traj):
            return traj
    return None


def falsifies(item: Literal, binding: Binding, theory: Theory) -> Callable[[Trajectory], bool]:
    """Falsification predicate: ``item`` true at some tick and false at the next."""

    def check(traj: Trajectory) -> bool:
        for a, b in zip(traj.states, traj.states[1:]):
            if holds(item, a, binding, theory) and not holds(item, b, binding, theory):
                return True
        return False

    return check


def search(start: HeapState, successors, horizon: int, goal) -> Optional[Trajectory]:
    """Breadth-first search over distinct heap states up to ``horizon`` ticks.

    ``successors(state)`` yields ``(event, next_state)``; ``goal(prev, event,
    next)`` decides a transition.  Returns the shortest witness trajectory.
    Equivalent to scanning :func:`trajectories` for a transition-level
    property, but visits every distinct state once.
    """
    parents: dict[HeapState, tuple] = {start: None}
    frontier = deque([(start, 0)])
    while frontier:
        s, depth = frontier.popleft()
        if depth >= horizon:
            continue
        for event, nxt in successors(s):
            if goal(s, event, nxt):
                return _rebuild(parents, s).extend(event, nxt)
            if nxt not in parents:
                parents[nxt] = (s, event)
                frontier.append((nxt, depth + 1))
    return None


def _rebuild(parents, s) -> Trajectory:
    chain = []
    while parents[s] is not None:
        prev, ev = parents[s]
        chain.append((ev, s))
        s = prev
    traj = Trajectory((s,))
    for ev, st in reversed(chain):
        traj = traj.extend(ev, st)
    return traj
