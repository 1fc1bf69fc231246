"""
What the stochastic model is worth
==================================

For each front point: RRP is the recourse problem value, RWS the value with
perfect information per scenario, and REV the value of planning for mean
demand. RVPI = RRP - RWS and RVSS = REV - RRP.
"""
# %%
from podfront import CVaR, GenParams, build_model, epsilon_constraint, generate_scenarios, synth_instance
from podfront.metrics import value_report

inst = synth_instance(12, 0.5, seed=8)
sc = generate_scenarios(inst, 4, GenParams(lambda1=0.4, lambda2=0.4, seed=8))
mode = CVaR(0.5)
front = epsilon_constraint(build_model(inst, sc, mode))

# %%
report = value_report(front, inst, sc, mode)
print(report.to_csv())
print("mean relative RVPI", report.avg_rvpi_rel, " max", report.max_rvpi_rel)
print("mean relative RVSS", report.avg_rvss_rel, " max", report.max_rvss_rel)
