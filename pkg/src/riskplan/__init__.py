"""Risk-perception-aware motion planning toolkit.

Models non-rational perception of uncertain spatial costs (CPT, CVaR, or
plain expectation), plans over the perceived-risk field with a risk-aware
RRT* variant, and fits perception parameters to target paths with SPSA.
"""

from .cost_field import (BumpObstacle, ConfigSpace, CostField, GaussianSource,
                         ScenarioError, bump_mean, eval_moments,
                         gaussian_value, load_scenario, save_scenario)
from .geometry import Path, arc_length, area_between, load_path_csv, save_path_csv
from .planner import (PlannerConfig, Tree, edge_cost, extract_path,
                      near_radius, path_cost, plan, steer)
from .risk import (CptModel, CptParams, CvarModel, ExpectedModel, Prospect,
                   RiskField, build_risk_field, cpt_risk, cvar_risk,
                   decision_weights, discretize_prospect, expected_risk,
                   perceived_risk, prelec_w, utility_v)
from .spsa import (CPT_BOUNDS, CVAR_BOUNDS, FitReport, SpsaConfig, fit,
                   perturb, spsa_gains, spsa_step)

__version__ = "0.1.0"
