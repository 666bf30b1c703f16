"""Why the internal BST delete needs RCU: a traversal running concurrently
with a two-child delete misses a key that never left the tree."""

from cdsynth import builtin_bundle, synthesize

_, kb = builtin_bundle("internal_bst")
report = synthesize(kb, "internal_bst")
print(report.table)

km = report.ops["del"].keymove
print(f"key {km.key} is present throughout, yet the search visits {km.visited}")
print(f"and misses node {km.missed_node}; its key now lives in {km.moved_to}.")
for ev in km.witness.events:
    print("   ", ev.describe())
for rcu in report.ops["del"].rcu:
    print(f"{rcu.op}/{rcu.block}: RCU ({rcu.cause})")
