"""
Handing the MILP to an outside solver
=====================================

The model is written as MPS, the command in PR_BACKEND runs on it and
leaves a solution file of `name value` lines. Here HiGHS stands in through
the small shim shipped with the tests (needs `pip install highspy`).
"""
# %%
import os
import sys
from pathlib import Path

from podfront import (
    CVaR, GenParams, SearchConfig, build_model, epsilon_constraint, fronts_equal, generate_scenarios,
    synth_instance,
)

shim = Path(__file__).resolve().parents[1] / "tests" / "highs_shim.py"
os.environ["PR_BACKEND"] = f"{sys.executable} {shim} {{mps}} {{sol}}"

inst = synth_instance(10, 0.5, seed=2)
sc = generate_scenarios(inst, 3, GenParams(seed=2))
model = build_model(inst, sc, CVaR(0.5))

# %%
# With PR_BACKEND set every solve goes outside unless a backend is named
outside = epsilon_constraint(model)
inside = epsilon_constraint(model, SearchConfig(backend="builtin"))
print([(int(p.f1), round(p.f2, 2)) for p in outside.points])
print("same front:", fronts_equal(outside, inside))
