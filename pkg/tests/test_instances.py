import pytest

from cdsynth.dsl import parse_knowledge
from cdsynth.engine import derive
from cdsynth.heap import HeapState
from cdsynth.instances import DeltaNotFound, applicable, least_delta, match_pre, unfold_instances

MEMBER_ONLY = "#op member.\n#traverse member from h.\n#descend edge(X,Y), key(X,Kx), Kx < K.\n"


def _chain(state):
    out, node = [], "h"
    while node is not None:
        out.append(node)
        node = state.successor(node)
    return out


def test_depth_zero_is_sentinels_only(list_kb):
    got = unfold_instances(list_kb.theory, 0)
    assert len(got) == 1 and _chain(got[0]) == ["h", "t"]


def test_depth_two_has_sorted_chains(list_kb):
    got = unfold_instances(list_kb.theory, 2)
    chains = [_chain(s) for s in got]
    assert ["h", "n1", "t"] in chains and ["h", "n1", "n2", "t"] in chains
    for s in got:
        keys = [s.key(n) for n in _chain(s)]
        assert keys == sorted(keys) and len(set(keys)) == len(keys)


@pytest.mark.parametrize("name", ["linked_list", "internal_bst", "external_bst"])
def test_every_instance_satisfies_root(bundles, name):
    th = bundles[name][0]
    for s in unfold_instances(th, 3):
        assert (th.root,) in derive(th, s)


def test_external_bst_depth_one(bundles):
    th = bundles["external_bst"][0]
    trees = unfold_instances(th, 1)
    root_kids = [sorted(l for a, l, _ in s.succ if a == s.successor("h", "left"))
                 for s in trees if s.successor("h", "left") is not None]
    assert ["left", "right"] in root_kids


def _ins_del(kb):
    return kb.operations["ins"], kb.operations["del"]


def test_match_ins_on_empty_list(list_kb):
    ins, _ = _ins_del(list_kb)
    empty = unfold_instances(list_kb.theory, 0)[0]
    bs = match_pre(ins, ins.blocks[0], empty, list_kb.theory, fixed={"Kt": 5})
    assert [(b.node("x"), b.node("y")) for b in bs] == [("h", "t")]


def test_no_delete_on_empty_list(list_kb):
    _, dl = _ins_del(list_kb)
    empty = unfold_instances(list_kb.theory, 0)[0]
    assert match_pre(dl, dl.blocks[0], empty, list_kb.theory) == []


def test_insert_window_respects_keys(list_kb):
    ins, _ = _ins_del(list_kb)
    s = HeapState.build({"h": 0, "n1": 5, "t": 1000}, [("h", "n1"), ("n1", "t")],
                        (("h", "min"), ("t", "max")), "t")
    bs = match_pre(ins, ins.blocks[0], s, list_kb.theory, fixed={"Kt": 7})
    assert [(b.node("x"), b.node("y")) for b in bs] == [("n1", "t")]


def test_least_delta_linked_list(list_kb):
    d = least_delta(list_kb)
    assert _chain(d.state) == ["h", "n1", "t"]
    ins_b, del_b = d.bindings["ins"][1], d.bindings["del"][1]
    assert (ins_b.node("x"), ins_b.node("y")) == ("n1", "t")
    assert (del_b.node("x"), del_b.node("y"), del_b.node("z")) == ("h", "n1", "t")
    # prefix minimality
    for s in unfold_instances(list_kb.theory, 4)[:d.depth_index]:
        assert applicable(list_kb, list_kb.operations["del"], s) is None


def test_least_delta_insert_only(list_kb):
    d = least_delta(list_kb, ops=["ins"])
    assert _chain(d.state) == ["h", "t"]


def test_least_delta_internal_bst_has_two_child_node(bundles):
    kb = bundles["internal_bst"][1]
    d = least_delta(kb)
    kids = {}
    for a, label, _ in d.state.succ:
        kids.setdefault(a, set()).add(label)
    assert any(v == {"left", "right"} for n, v in kids.items() if n != "h")


def test_member_only_delta_is_sentinels(list_kb):
    kb = parse_knowledge(MEMBER_ONLY, list_kb.theory)
    assert _chain(least_delta(kb).state) == ["h", "t"]


def test_depth_bound_too_small(list_kb):
    with pytest.raises(DeltaNotFound) as err:
        least_delta(list_kb, 0)
    assert err.value.missing == ["del"]


def test_search_is_monotone_in_depth(list_kb):
    d = least_delta(list_kb, 1)
    for depth in range(1, 5):
        assert least_delta(list_kb, depth).state == d.state
