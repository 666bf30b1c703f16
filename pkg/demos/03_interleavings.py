"""Run every interleaving of generated list code, then of a variant with the
insert steps in the naive order."""

import dataclasses

from cdsynth import builtin_bundle, explore, synthesize
from cdsynth.oracle import program

_, kb = builtin_bundle("linked_list")
report = synthesize(kb, "linked_list")
delta = report.delta.state

threads = [program(report, kb, 1, "ins", 15), program(report, kb, 2, "del", 10)]
v = explore(kb, threads, delta)
print(f"synthesized code: ok={v.ok}, {v.states} states, {v.finals} final states")

blk, ir = threads[0].codes[0]
naive = dataclasses.replace(ir, steps=tuple(sorted(ir.steps)))
threads[0] = dataclasses.replace(threads[0], codes=((blk, naive),))
v = explore(kb, threads, delta)
print(f"naive order: ok={v.ok}")
print("counterexample:", v.counterexample["message"])
for e in v.counterexample["events"]:
    print("   ", e)
