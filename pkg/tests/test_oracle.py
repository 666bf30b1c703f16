import dataclasses

import pytest

from cdsynth.instances import least_delta
from cdsynth.oracle import (ScheduleError, default_calls, explore, linearization_exists, program,
                            run_schedule)

PAIRS = [(("ins", 15), ("del", 10)), (("ins", 5), ("del", 10)), (("ins", 5), ("ins", 15)),
         (("ins", 15), ("ins", 15)), (("del", 10), ("del", 10))]


@pytest.fixture(scope="module")
def delta(list_kb):
    return least_delta(list_kb).state


def programs(report, kb, calls):
    return [program(report, kb, i + 1, op, key) for i, (op, key) in enumerate(calls)]


@pytest.mark.parametrize("calls", PAIRS, ids=lambda c: "-".join(f"{o}{k}" for o, k in c))
def test_pairs_are_correct(list_kb, list_report, delta, calls):
    v = explore(list_kb, programs(list_report, list_kb, calls), delta)
    assert v.ok and v.complete and v.counterexample is None


def test_three_threads(list_kb, list_report, delta):
    calls = [("ins", 15), ("del", 10), ("ins", 5)]
    v = explore(list_kb, programs(list_report, list_kb, calls), delta)
    assert v.ok


def test_no_threads(list_kb, delta):
    v = explore(list_kb, [], delta)
    assert v.ok and v.finals == 1


def test_insert_aborts_after_delete(list_kb, list_report, delta):
    ps = programs(list_report, list_kb, [("ins", 15), ("del", 10)])
    tr = run_schedule(list_kb, ps, delta, (1,) + (2,) * 7 + (1,) * 5)
    assert tr.completed == [(2, "del", 10)]
    assert any("abort" in e.describe() for e in tr.events if e.tid == 1)
    assert tr.states[-1].successor("h") == "t"


def test_invalid_schedule(list_kb, list_report, delta):
    ps = programs(list_report, list_kb, [("ins", 15)])
    with pytest.raises(ScheduleError):
        run_schedule(list_kb, ps, delta, (2,))
    with pytest.raises(ScheduleError):
        run_schedule(list_kb, ps, delta, (1,) * 20)


def test_locks_block(list_kb, list_report, delta):
    ps = programs(list_report, list_kb, [("ins", 15), ("del", 10)])
    # T1 holds n1 (its x); T2's y is n1 too
    with pytest.raises(ScheduleError):
        run_schedule(list_kb, ps, delta, (1, 1, 2, 2, 2))


def test_broken_order_is_caught(list_kb, list_report, delta):
    good = program(list_report, list_kb, 1, "ins", 15)
    blk, ir = good.codes[0]
    bad = dataclasses.replace(good, codes=((blk, dataclasses.replace(ir, steps=tuple(sorted(ir.steps)))),))
    v = explore(list_kb, [bad, program(list_report, list_kb, 2, "del", 10)], delta)
    assert not v.invariant_ok
    assert "list" in v.counterexample["message"]
    assert v.counterexample["schedule"]


def test_linearization_exists(list_kb, list_report, delta):
    ps = programs(list_report, list_kb, [("ins", 15), ("del", 10)])
    tr = run_schedule(list_kb, ps, delta, (1,) * 8 + (2,) * 7)
    assert linearization_exists(list_kb, ps, delta, tr.states[-1], tr.completed)
    assert not linearization_exists(list_kb, ps, delta, delta, tr.completed)


def test_default_calls(list_kb, list_report):
    d = list_report.delta
    assert default_calls(list_kb, d, ["ins", "del"], 2) == [("ins", 505), ("del", 10)]
    assert default_calls(list_kb, d, ["ins", "del"], 0) == []


@pytest.mark.parametrize("name", ["internal_bst", "external_bst"])
def test_trees(bundles, reports, name):
    kb = bundles[name][1]
    rep = reports(name)
    ops = [o for o, r in rep.ops.items() if r.codes]
    calls = default_calls(kb, rep.delta, ops, 2)
    v = explore(kb, programs(rep, kb, calls), rep.delta.state)
    assert v.ok
