from itertools import chain, combinations

import pytest

from cdsynth import interference
from cdsynth.dsl import parse_knowledge
from cdsynth.engine import apply_step, derive, holds
from cdsynth.instances import block_stage, least_delta
from cdsynth.interference import build_interference, window_heuristic
from cdsynth.tasks import (default_invariant, task1_unfalsify, task2_adequacy,
                           task3_program_order, task4_keymove)

from helpers import falsified_at_end, replays


def stage(kb, op, block=0):
    o = kb.operations[op]
    blk = o.blocks[block]
    start, bindings = block_stage(kb, o, blk, least_delta(kb))
    return o, blk, start, bindings


def test_task1_insert(list_kb):
    o, blk, start, bs = stage(list_kb, "ins")
    rep = task1_unfalsify(list_kb, o, blk, start, bs)
    assert rep.unfalsify == ["suffix(y)"]
    for name in ("reach(x)", "edge(x,y)"):
        v = rep.verdict(name)
        assert v.falsifiable
        assert replays(v.witness, list_kb.theory)
        assert falsified_at_end(v.witness, v.literal, v.binding, list_kb.theory)


def test_task1_delete(list_kb):
    o, blk, start, bs = stage(list_kb, "del")
    rep = task1_unfalsify(list_kb, o, blk, start, bs)
    assert rep.unfalsify == ["reach(x)", "suffix(z)"]
    assert rep.verdict("edge(x,y)").falsifiable and rep.verdict("edge(y,z)").falsifiable


def test_task1_horizon_zero_is_degenerate(list_kb):
    o, blk, start, bs = stage(list_kb, "ins")
    rep = task1_unfalsify(list_kb, o, blk, start, bs, horizon=0)
    assert rep.degenerate and not any(v.falsifiable for v in rep.verdicts)


def test_task1_empty_pre(list_kb):
    text = "#op touch block1\n  pre []\n  post []\n  steps [].\n"
    try:
        kb = parse_knowledge(text, list_kb.theory)
    except Exception:
        pytest.skip("knowledge without node symbols is rejected by the parser")
    o = kb.operations["touch"]
    rep = task1_unfalsify(kb, o, o.blocks[0], least_delta(list_kb).state, [])
    assert rep.unfalsify == [] and rep.verdicts == []


def test_window_heuristic(list_kb):
    for op in ("ins", "del"):
        o, blk, _, bs = stage(list_kb, op)
        assert window_heuristic(o, blk, bs[0]) == frozenset(bs[0].node(s) for s in "xy")


@pytest.mark.parametrize("op", ["ins", "del"])
def test_task2_window_is_adequate(list_kb, op):
    o, blk, start, bs = stage(list_kb, op)
    assert task2_adequacy(list_kb, o, blk, start, bs, ["x", "y"]).adequate


@pytest.mark.parametrize("op", ["ins", "del"])
def test_task2_no_locks_is_inadequate(list_kb, op):
    o, blk, start, bs = stage(list_kb, op)
    rep = task2_adequacy(list_kb, o, blk, start, bs, [])
    assert not rep.adequate
    assert replays(rep.witness, list_kb.theory)
    lit = next(l for l in blk.literals() if str(l) == rep.falsified)
    assert falsified_at_end(rep.witness, lit, rep.binding, list_kb.theory)


def test_task2_all_nodes_is_adequate(list_kb):
    o, blk, start, bs = stage(list_kb, "ins")
    assert task2_adequacy(list_kb, o, blk, start, bs, lock_nodes=list(start.nodes)).adequate


def test_task2_delete_needs_more_than_x(list_kb):
    o, blk, start, bs = stage(list_kb, "del")
    rep = task2_adequacy(list_kb, o, blk, start, bs, ["x"])
    assert not rep.adequate and rep.falsified == "edge(y,z)"


def test_task2_literal_guard_admits_concurrent_delete(list_kb):
    o, blk, start, bs = stage(list_kb, "ins")
    rep = task2_adequacy(list_kb, o, blk, start, bs, ["x", "y"], guard="literal")
    assert not rep.adequate and rep.falsified == "reach(x)"


def _subsets(items):
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


@pytest.mark.parametrize("op", ["ins", "del"])
def test_lock_monotonicity(list_kb, op):
    o, blk, start, bs = stage(list_kb, op)
    nodes = list(start.nodes)
    verdict = {frozenset(s): task2_adequacy(list_kb, o, blk, start, bs,
                                            lock_nodes=list(s)).adequate
               for s in _subsets(nodes)}
    for small, ok in verdict.items():
        if ok:
            assert all(verdict[big] for big in verdict if small <= big)


def test_task3_insert(list_kb):
    o, blk, start, bs = stage(list_kb, "ins")
    rep = task3_program_order(list_kb, o, blk, start, bs[0])
    assert rep.valid == [(2, 1)]
    rej = rep.rejection((1, 2))
    assert ("list",) not in derive(list_kb.theory, rej.state)
    assert "list" in rej.reason


def test_task3_delete(list_kb):
    o, blk, start, bs = stage(list_kb, "del")
    assert task3_program_order(list_kb, o, blk, start, bs[0]).valid == [(1,)]


@pytest.mark.parametrize("name", ["linked_list", "internal_bst", "external_bst"])
def test_task3_soundness(bundles, name):
    th, kb = bundles[name]
    for o in kb.destructive():
        for blk in o.blocks:
            if not blk.steps:
                continue
            start, bs = block_stage(kb, o, blk, least_delta(kb))
            rep = task3_program_order(kb, o, blk, start, bs[0])
            for order in rep.valid:
                st = start
                for i in order:
                    st = apply_step(st, blk.steps[i - 1], bs[0])
                    assert default_invariant(th, start, st, blk, bs[0]) is None
                assert all(holds(l, st, bs[0], th) for l in blk.post)
            for r in rep.rejected:
                assert r.reason
                assert default_invariant(th, start, r.state, blk, bs[0]) is not None or \
                    not all(holds(l, r.state, bs[0], th) for l in blk.post)


def test_task4_internal_bst_moves_successor(bundles):
    kb = bundles["internal_bst"][1]
    o = kb.operations["del"]
    d = least_delta(kb)
    starts = [d.state] + [block_stage(kb, o, b, d)[0] for b in o.blocks]
    rep = task4_keymove(kb, o, starts)
    assert rep.keymove
    assert rep.missed_node is not None and rep.missed_node not in rep.visited
    first, last = rep.witness.states[0], rep.witness.states[-1]
    removed = first.reachable() - last.reachable()

    def leftmost(n):
        while first.successor(n, "left") is not None:
            n = first.successor(n, "left")
        return n

    # the missed node is the in-order successor of a deleted two-child node
    successors = {leftmost(first.successor(d, "right")) for d in removed
                  if first.successor(d, "left") and first.successor(d, "right")}
    assert rep.missed_node in successors
    assert last.key(rep.moved_to) == rep.key and rep.moved_to != rep.missed_node


@pytest.mark.parametrize("op", ["ins", "del"])
@pytest.mark.parametrize("horizon", [0, 1, 2, 3, 4])
def test_task4_linked_list_never_moves(list_kb, op, horizon):
    o = list_kb.operations[op]
    assert not task4_keymove(list_kb, o, [least_delta(list_kb).state], horizon).keymove


def test_task4_ignores_action_order(bundles, monkeypatch):
    kb = bundles["internal_bst"][1]
    o = kb.operations["del"]
    starts = [least_delta(kb).state]
    first = task4_keymove(kb, o, starts, model_=build_interference(kb)).keymove
    original = interference.enabled_actions
    monkeypatch.setattr(interference, "enabled_actions",
                        lambda *a, **k: list(reversed(original(*a, **k))))
    assert task4_keymove(kb, o, starts, model_=build_interference(kb)).keymove == first
