import json
from pathlib import Path

import pytest

from cdsynth.codegen import (CAUSES, RCU, SUCCESS, UNCHANGED, CodeIR, SynthConfig,
                             chain_comparisons, render_op, render_report, render_text, synthesize)
from cdsynth.dsl import Comparison, Term

GOLDEN = Path(__file__).parent / "golden"


def test_linked_list_table(list_report):
    assert list_report.table == {"member": UNCHANGED, "ins": SUCCESS, "del": SUCCESS}


def test_insert_ir(list_report):
    ir = list_report.ops["ins"].codes[0]
    assert set(ir.locks) == {"x", "y"}
    assert ir.validate == ("reach(x)", "edge(x,y)", "Kx < Kt < Ky")
    assert [str(s) for _, s in ir.steps] == ["link(tau,y)", "link(x,tau)"]
    assert ir.unlocks == ir.locks[::-1]


def test_insert_golden_text(list_report):
    ir = list_report.ops["ins"].codes[0]
    assert render_text(ir) == (GOLDEN / "linked_list_ins.txt").read_text()


def test_delete_ir(list_report):
    ir = list_report.ops["del"].codes[0]
    assert ir.locks == ("x", "y")
    assert ir.validate == ("edge(x,y)", "edge(y,z)", "Kt = Ky")


def test_member_is_traversal_only(list_report):
    text = render_op(list_report.ops["member"])
    assert text.startswith("traverse from h {") and "lock" not in text


def test_ir_round_trip(list_report):
    for r in list_report.ops.values():
        for ir in r.codes:
            d = json.loads(json.dumps(ir.to_dict()))
            assert d["schema_version"] == 1
            back = CodeIR.from_dict(d, ir.traversal)
            assert back == ir


def test_unknown_schema_version_is_rejected(list_report):
    d = list_report.ops["ins"].codes[0].to_dict()
    d["schema_version"] = 99
    with pytest.raises(ValueError):
        CodeIR.from_dict(d)


def test_internal_bst_delete_is_rcu_for_key_movement(reports):
    rep = reports("internal_bst")
    assert rep.table == {"member": UNCHANGED, "ins": SUCCESS, "del": RCU}
    assert {r.cause for r in rep.ops["del"].rcu} == {"key-movement"}
    assert rep.ops["del"].keymove.keymove


def test_inadequate_heuristic_recommends_rcu(list_kb):
    rep = synthesize(list_kb, "ll", SynthConfig(heuristic=["x"], ops=["del"]))
    (rcu,) = rep.ops["del"].rcu
    assert rcu.cause == "inadequate-locks" and rcu.cause in CAUSES
    assert rcu.witness.falsified == "edge(y,z)"


def test_report_is_deterministic(list_kb):
    a = render_report(synthesize(list_kb, "ll"))
    b = render_report(synthesize(list_kb, "ll"))
    assert a == b
    doc = json.loads(a)
    assert doc["table"]["ins"] == SUCCESS and doc["schema_version"] == 1


def test_horizon_zero_is_flagged(list_kb):
    rep = synthesize(list_kb, "ll", SynthConfig(horizon=0))
    assert rep.degenerate


def test_chained_comparisons():
    v = lambda n: Term("var", n)
    got = chain_comparisons([Comparison("<", v("A"), v("B")), Comparison("<", v("B"), v("C")),
                             Comparison("=", v("D"), v("E"))])
    assert got == ["A < B < C", "D = E"]
