"""Walk through synthesis of the sorted linked list, one reasoning task at a
time, then print the generated code."""

from cdsynth import builtin_bundle, least_delta, synthesize
from cdsynth.codegen import render_op
from cdsynth.instances import block_stage
from cdsynth.tasks import task1_unfalsify, task2_adequacy, task3_program_order

_, kb = builtin_bundle("linked_list")
delta = least_delta(kb)
print("least instance on which every update applies:")
print(delta.to_facts())

ins = kb.operations["ins"]
blk = ins.blocks[0]
start, bindings = block_stage(kb, ins, blk, delta)

t1 = task1_unfalsify(kb, ins, blk, start, bindings)
print("conjuncts no other thread can falsify:", t1.unfalsify)
w = t1.verdict("edge(x,y)").witness
print("a concurrent insert breaking edge(x,y):")
for ev in w.events:
    print("   ", ev.describe())

t3 = task3_program_order(kb, ins, blk, start, bindings[0])
print("safe step orders:", t3.valid)
print("why <1,2> is unsafe:", t3.rejection((1, 2)).reason)

for locks in ([], ["x", "y"]):
    t2 = task2_adequacy(kb, ins, blk, start, bindings, locks)
    print(f"locks {locks}: {'adequate' if t2.adequate else 'inadequate, ' + t2.falsified}")

report = synthesize(kb, "linked_list")
for name, result in report.ops.items():
    print(f"\n== {name}: {result.outcome}")
    print(render_op(result), end="")
