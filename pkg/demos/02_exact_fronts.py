"""
Exact Pareto fronts under three risk attitudes
==============================================

Cost of opened PODs against uncovered demand, where the second objective is
the mean, the worst case or the CVaR of the loss over scenarios.
"""
# %%
from podfront import (
    CVaR, Expectation, GenParams, WorstCase, balanced_box, build_model, epsilon_constraint,
    fronts_equal, generate_scenarios, synth_instance,
)

inst = synth_instance(14, 0.4, seed=3)
sc = generate_scenarios(inst, 5, GenParams(seed=3))

# %%
fronts = {}
for name, mode in [("mean", Expectation()), ("cvar 0.6", CVaR(0.6)), ("worst", WorstCase())]:
    fronts[name] = epsilon_constraint(build_model(inst, sc, mode))
    print(f"{name:>9}:", [(int(p.f1), round(p.f2, 1)) for p in fronts[name].points])

# %%
# Being more risk averse costs more at the same level of service.
# The balanced box search finds the same set by splitting criterion space.
m = build_model(inst, sc, CVaR(0.6))
print("balanced box agrees:", fronts_equal(balanced_box(m), fronts["cvar 0.6"]))

# %%
# alpha = 0 is the mean, alpha = 1 - 1/N is the worst case
print(fronts_equal(epsilon_constraint(build_model(inst, sc, CVaR(0.0))), fronts["mean"]))
print(fronts_equal(epsilon_constraint(build_model(inst, sc, CVaR(1 - 1 / sc.N))), fronts["worst"]))
