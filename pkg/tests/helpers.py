"""Replay checks and an independent fixed-point evaluator shared by the tests."""

from cdsynth.engine import holds
from cdsynth.heap import HeapState
from cdsynth.interference import apply_action


def replays(traj, theory) -> bool:
    """Every transition of ``traj`` is idle or the application of its action
    (up to renaming of fresh nodes)."""
    for ev, a, b in zip(traj.events, traj.states, traj.states[1:]):
        if ev.kind == "idle":
            ok = a == b
        elif ev.kind == "interference":
            ok = apply_action(a, ev.payload).normalized()[0] == b.normalized()[0]
        else:
            ok = True
        if not ok:
            return False
    return True


def falsified_at_end(traj, literal, binding, theory) -> bool:
    a, b = traj.states[-2], traj.states[-1]
    return holds(literal, a, binding, theory) and not holds(literal, b, binding, theory)


def _value(term, env):
    return env[term.name] if term.is_var else term.name


def _match(atoms, facts, env):
    if not atoms:
        yield env
        return
    first, rest = atoms[0], atoms[1:]
    for f in facts:
        if f[0] != first.pred or len(f) != len(first.args) + 1:
            continue
        e = dict(env)
        for t, v in zip(first.args, f[1:]):
            if t.is_var:
                if e.setdefault(t.name, v) != v:
                    break
            elif t.name != v:
                break
        else:
            yield from _match(rest, facts, e)


def naive_model(theory, state):
    """Stratum by stratum, re-fire every rule until nothing changes."""
    facts = {("key", n, k) for n, k in state.keys}
    for a, label, b in state.succ:
        facts.add(("edge", a, b))
        if theory.labelled:
            facts.add(("child", a, b, label))
    rules = [r for r in theory.rules if r.head is not None]
    level = {r.head.pred: 0 for r in rules}
    changed = True
    while changed:
        changed = False
        for r in rules:
            need = max([level.get(a.pred, 0) for a in r.pos]
                       + [level.get(a.pred, 0) + 1 for a in r.neg] + [0])
            if need > level[r.head.pred]:
                level[r.head.pred], changed = need, True
    for lv in sorted(set(level.values())):
        grow = True
        while grow:
            grow = False
            for r in rules:
                if level[r.head.pred] != lv:
                    continue
                for env in list(_match(list(r.pos), list(facts), {})):
                    ok = all((_value(c.left, env) < _value(c.right, env)) if c.op == "<"
                             else (_value(c.left, env) == _value(c.right, env)) for c in r.cmps)
                    ok = ok and all((a.pred,) + tuple(_value(t, env) for t in a.args) not in facts
                                    for a in r.neg)
                    if ok:
                        f = (r.head.pred,) + tuple(_value(t, env) for t in r.head.args)
                        if f not in facts:
                            facts.add(f)
                            grow = True
    derived = theory.derived
    return frozenset(f for f in facts if f[0] in derived)


def random_state(rng, theory, max_nodes=6):
    """Arbitrary heap (not necessarily well formed) over at most ``max_nodes``
    nodes, sentinels included."""
    keys = [5, 10, 20, 30, 40]
    if theory.labelled:
        nodes = [f"n{i}" for i in range(1, rng.randint(0, max_nodes - 1) + 1)]
        km = {"h": 1000, **{n: rng.choice(keys) for n in nodes}}
        edges = [(a, b, label) for a in ["h"] + nodes for label in ("left", "right")
                 for b in [rng.choice(nodes + [None, None])] if b is not None]
        return HeapState.build(km, edges, (("h", "max"),))
    nodes = [f"n{i}" for i in range(1, rng.randint(0, max_nodes - 2) + 1)]
    km = {"h": 0, "t": 1000, **{n: rng.choice(keys) for n in nodes}}
    edges = [(a, b) for a in ["h"] + nodes for b in [rng.choice(nodes + ["t", None])]
             if b is not None]
    return HeapState.build(km, edges, (("h", "min"), ("t", "max")), "t")


ACCEPTANCE: list[str] = []


class criterion:
    """Context manager recording one pass/fail line per acceptance criterion."""

    def __init__(self, number: int, text: str):
        self.number, self.text = number, text

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        status = "PASS" if kind is None else "FAIL"
        line = f"criterion {self.number}: {status}  {self.text}"
        if exc is not None and str(exc):
            line += f"  [{str(exc).splitlines()[0]}]"
        ACCEPTANCE.append(line)
        print(line)
        return False
