"""Build an interacting-alarm model and flatten it to a single rate matrix.

The running example is a three-alarm chain A -> B -> C: the root alarm A
toggles slowly on its own, while B and C race to copy the state of their
parent.  Each alarm carries one intensity-matrix block per configuration of
its parents.
"""

import numpy as np

from ctbn_sentry import (
    DiGraph,
    amalgamate,
    build_replicator_ctbn,
    enumerate_states,
    local_rate,
    model_to_dot,
    state_index,
    validate_model,
)

# The chain graph, a slow root, fast followers.  slow_rate is a pair:
# off->on at 1.0, on->off at 5.0.
graph = DiGraph(("A", "B", "C"), (("A", "B"), ("B", "C")))
model = build_replicator_ctbn(graph, slow_processes={"A"},
                              slow_rate=(1.0, 5.0), fast_rate=15.0, base_rate=0.1)

print("validation violations:", validate_model(model))

# B's rates depend on A: pulled toward 0 while A is off, toward 1 once A is on.
for name, cim in zip(model.names, model.cims):
    print(f"\nprocess {name}, parents {model.processes[model.name_to_index[name]].parents}")
    for cfg in range(cim.parent_config_count):
        print(f"  parent config {cfg}:")
        print("   ", np.array2string(cim.matrices[cfg], prefix="    "))

# Rate lookups read the row that is active in a given joint state.
print("\nB's row in state (A=1, B=0, C=0):", local_rate(model, "B", (1, 0, 0)))
print("B's row in state (A=0, B=0, C=1):", local_rate(model, "B", (0, 0, 1)))

# Flattening produces the joint 8x8 intensity matrix.  Only states one flip
# apart are connected; rows sum to zero.
Q = amalgamate(model)
print("\nflattened intensity matrix (states indexed 000..111):")
print(np.array2string(Q, precision=2, suppress_small=True))
print("row sums:", np.abs(Q.sum(axis=1)).max())

i = state_index((0, 0, 0), model)
print("\nexit rate of the all-quiet state:", -Q[i, i])
print("reachable from 000 in one jump:",
      [  # the three single-flip neighbors
          "".join(map(str, s)) for s in enumerate_states(model)
          if Q[i, state_index(s, model)] > 0
      ])

print("\nDOT rendering of the dependence graph:\n")
print(model_to_dot(model))
