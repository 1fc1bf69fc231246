"""
Building an instance and sampling demand scenarios
==================================================

A synthetic planning area: nodes scattered in a square, a subset of them
eligible to host a POD, and a walking radius deciding who can reach what.
"""
# %%
import numpy as np

from podfront import GenParams, coverage_mask, generate_scenarios, synth_instance

inst = synth_instance(15, 0.4, seed=11)
print(inst.n, "nodes,", inst.n_candidates, "candidates")
print("opening costs", inst.gamma)
print("capacities   ", inst.cap)

# %%
# Which nodes can walk to which candidate
mask = coverage_mask(inst)
print("nodes with no POD in reach:", int((~mask.any(axis=1)).sum()))
print("reachable nodes per candidate:", mask.sum(axis=0))

# %%
# Demand per scenario: a shared shock times a per-node shock times population.
# lambda1 moves every node together, lambda2 spreads nodes apart.
calm = generate_scenarios(inst, 6, GenParams(lambda1=0.1, lambda2=0.1, seed=1))
wild = generate_scenarios(inst, 6, GenParams(lambda1=0.5, lambda2=0.5, seed=1))
pop = np.asarray(inst.pop)
print("total demand / total population")
print("  calm:", np.round(calm.total() / pop.sum(), 2))
print("  wild:", np.round(wild.total() / pop.sum(), 2))
