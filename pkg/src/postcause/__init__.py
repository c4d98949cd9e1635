"""Posterior causal attribution of a continuous outcome to correlated binary causes."""
from .counterfactual import (CdfCache, CounterfactualMap, IteRecord, ite, ite_all, map_for_evidence,
                             map_gridsearch, map_plugin)
from .domain import (CausalGraph, Dataset, Evidence, Interval, OutcomeEvent, PositivityError,
                     Stratum, enumerate_geq, enumerate_leq, partial_order_leq, stratum_rows)
from .ecdf import DensityEstimate, EmpiricalCdf, Support, fit_ecdf
from .estimands import (EstimandResult, attribution_matrix, attribution_table, nested_expectation,
                        post_ice, post_mediation)
from .inference import (BootstrapConfig, BootstrapError, BootstrapResult, MapVariance,
                        analytic_map_variance, bootstrap, map_covariance)
from .monotone_prob import CrossWorldDist, cross_world_dist, falsify_monotonicity, ratio_r0, ratio_r1
from .simulator import ScmSpec, demo_spec, generate, true_estimand, true_estimand_with_se

__version__ = "0.1.0"
