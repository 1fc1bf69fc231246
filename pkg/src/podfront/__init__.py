"""Bi-objective POD placement under demand uncertainty.

Open points of distribution (PODs) at a cost, then assign demand nodes to
open PODs per scenario. The two objectives are opening cost and a risk
measure (mean, worst case or CVaR) of uncovered demand. The package builds
the deterministic-equivalent MILP, solves it with a bundled branch and bound
or an external solver, and traces exact or approximate Pareto fronts.
"""
from .core import (
    TAU2, Box, FrontEntry, ObjectivePoint, ParetoFront, build_front, dominates, fronts_equal,
    insert_nondominated, nadir, read_front, write_front,
)
from .errors import (
    BackendError, BadAlpha, BadReferencePoint, BadScenarioCount, DimensionMismatch, EmptyFront,
    EndpointsTimeout, NumericalFailure, ParseError, PodFrontError,
)
from .frontier import SearchConfig, balanced_box, endpoints, epsilon_constraint
from .instances import (
    GenParams, Instance, ScenarioSet, coverage_mask, generate_scenarios, read_instance,
    read_scenarios, synth_instance, write_instance, write_scenarios,
)
from .matheuristic import (
    MatConfig, asymmetric_row, local_branching_row, mat_frontier, round_lp, zero_fixing_constraints,
)
from .metrics import IndicatorReport, hypervolume, rev, rws, value_report
from .models import (
    CVaR, Expectation, UncertaintyMode, WorstCase, build_model, cvar, evaluate_point,
    evaluate_recourse, var_cvar,
)

__version__ = "0.1.0"
