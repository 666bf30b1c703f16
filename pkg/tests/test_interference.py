from hypothesis import given, settings, strategies as st

from cdsynth.dsl import parse_knowledge
from cdsynth.engine import derive, holds
from cdsynth.instances import least_delta, unfold_instances
from cdsynth.interference import apply_action, build_interference, enabled_actions, window_symbols

MEMBER_ONLY = "#op member.\n#traverse member from h.\n#descend edge(X,Y), key(X,Kx), Kx < K.\n"


def _delta(kb):
    return least_delta(kb).state


def _find(acts, op, **nodes):
    for a in acts:
        if a.op == op and all(a.binding.node(k) == v for k, v in nodes.items()):
            return a
    return None


def test_list_templates(list_kb):
    m = build_interference(list_kb)
    assert [(op.name, [str(s) for s in blk.steps]) for op, blk in m.templates] == [
        ("ins", ["link(x,tau)", "link(tau,y)"]), ("del", ["link(x,z)"])]


def test_member_only_has_no_templates(list_kb):
    kb = parse_knowledge(MEMBER_ONLY, list_kb.theory)
    assert build_interference(kb).templates == ()


def test_internal_bst_delete_template_relocates(bundles):
    m = build_interference(bundles["internal_bst"][1])
    deep = [blk for op, blk in m.templates if op.name == "del" and blk.block_id == "deep"]
    assert deep and len(deep[0].steps) >= 3


def test_enabled_on_delta(list_kb):
    m = build_interference(list_kb)
    acts = m.enabled(_delta(list_kb))
    assert _find(acts, "del", x="h", y="n1", z="t") is not None
    assert _find(acts, "ins", x="h", y="n1") and _find(acts, "ins", x="n1", y="t")


def test_protocol_guard_disables_intersecting_windows(list_kb):
    m = build_interference(list_kb)
    acts = m.enabled(_delta(list_kb), frozenset({"h", "n1"}), "protocol")
    assert _find(acts, "del", y="n1") is None
    assert _find(acts, "ins", x="n1", y="t") is None


def test_literal_guard_only_checks_modified_node(list_kb):
    m = build_interference(list_kb)
    acts = m.enabled(_delta(list_kb), frozenset({"n1", "t"}), "literal")
    assert _find(acts, "del", y="n1") is not None


def test_apply_delete_and_insert(list_kb):
    m = build_interference(list_kb)
    d = _delta(list_kb)
    acts = m.enabled(d)
    gone = apply_action(d, _find(acts, "del", y="n1"))
    assert gone.successor("h") == "t" and ("reach", "n1") not in derive(list_kb.theory, gone)
    ins = _find(acts, "ins", x="n1", y="t")
    grown = apply_action(d, ins)
    tau = ins.binding.node("tau")
    assert [grown.successor("h"), grown.successor("n1"), grown.successor(tau)] == ["n1", tau, "t"]
    assert ("list",) in derive(list_kb.theory, grown)


def test_idle_ticks_only(list_kb):
    d = _delta(list_kb)
    idle = apply_action(d, None)
    assert idle == d and idle.clock == d.clock + 1


STATES = {}


def _states(bundles, name):
    if name not in STATES:
        STATES[name] = unfold_instances(bundles[name][0], 3)
    return STATES[name]


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(["linked_list", "internal_bst", "external_bst"]), data=st.data())
def test_actions_preserve_root_and_respect_pre(bundles, name, data):
    th, kb = bundles[name]
    m = build_interference(kb)
    s = data.draw(st.sampled_from(_states(bundles, name)))
    blocks = {(op.name, blk.block_id): blk for op, blk in m.templates}
    for act in m.enabled(s):
        blk = blocks[(act.op, act.block)]
        assert all(holds(it, s, act.binding, th) for it in blk.pre)
        assert (th.root,) in derive(th, apply_action(s, act))
        # self-exclusion
        assert act not in enabled_actions(m, s, act.window, "protocol")


def test_windows(bundles, list_kb):
    ops = list_kb.operations
    assert window_symbols(ops["ins"].blocks[0]) == ["x", "y"]
    assert window_symbols(ops["del"].blocks[0]) == ["x", "y"]
    got = {(name, op.name, blk.block_id): window_symbols(blk, bundles[name][1].fresh)
           for name in ("internal_bst", "external_bst")
           for op in bundles[name][1].operations.values() for blk in op.blocks if blk.steps}
    assert got[("internal_bst", "ins", "left")] == ["x"]
    assert got[("internal_bst", "del", "direct")] == ["p", "d", "r"]
    assert got[("internal_bst", "del", "deep")] == ["p", "d", "r", "s"]
    assert all(w == ["p", "l"] for k, w in got.items() if k[:2] == ("external_bst", "ins"))
    assert all(w == ["g", "p", "l"] for k, w in got.items() if k[:2] == ("external_bst", "del"))
