"""External BST: leaf inserts and deletes synthesize to lock-based code;
the oracle checks a concurrent insert and delete on the least instance."""

from cdsynth import builtin_bundle, explore, synthesize
from cdsynth.codegen import render_op
from cdsynth.oracle import default_calls, program

_, kb = builtin_bundle("external_bst")
report = synthesize(kb, "external_bst")
print(report.table)
print(render_op(report.ops["del"]))

calls = default_calls(kb, report.delta, ["ins", "del"])
v = explore(kb, [program(report, kb, i + 1, op, k) for i, (op, k) in enumerate(calls)],
            report.delta.state)
print(f"{calls}: ok={v.ok}, {v.states} states")
