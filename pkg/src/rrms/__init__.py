"""Simulator for randomly growing recursive metric spaces.

Spaces grow by repeatedly gluing random weighted blocks at random latch
points; the quantity of interest is the insertion depth, the distance from
the root hook to the n'th latch.  The package provides the growth engine,
three alternative samplers of the same depth (bucket sum, independent
approximation, and their coupling), exact small-n oracles, Monte Carlo
diagnostics for the log-scale law of large numbers and CLT, and a CLI.
"""

from .blocks import (
    BlockFamily,
    BlockInstance,
    FamilyMoments,
    custom_discrete_family,
    family_from_config,
    geometric_path_family,
    hooking_family,
    k2_family,
    uniform_segment_family,
)
from .couplings import (
    ExpectedWeights,
    WeightTrace,
    draw_weight_trace,
    exact_bucket_pmf,
    finite_n_mean_bound,
    sample_bucket_depth,
    sample_coupled_pair,
    sample_independent_approx,
    theoretical_limits,
)
from .dists import ScalarDist, constant, exponential, finite_pmf, geometric
from .engine import DepthRecord, GrowthState, final_depth, grow_step, init, run_depth_stream
from .exactoracle import DepthPmf, exact_depth_pmf, exact_mean_bucket
from .stats import (
    CltReport,
    McRunSpec,
    SummaryStats,
    chi_square_gof,
    clt_report,
    gap_report,
    lln_report,
    monte_carlo,
)

__version__ = "0.1.0"

__all__ = [
    "BlockFamily",
    "BlockInstance",
    "CltReport",
    "DepthPmf",
    "DepthRecord",
    "ExpectedWeights",
    "FamilyMoments",
    "GrowthState",
    "McRunSpec",
    "ScalarDist",
    "SummaryStats",
    "WeightTrace",
    "chi_square_gof",
    "clt_report",
    "constant",
    "custom_discrete_family",
    "draw_weight_trace",
    "exact_bucket_pmf",
    "exact_depth_pmf",
    "exact_mean_bucket",
    "exponential",
    "family_from_config",
    "final_depth",
    "finite_n_mean_bound",
    "finite_pmf",
    "gap_report",
    "geometric",
    "geometric_path_family",
    "grow_step",
    "hooking_family",
    "init",
    "k2_family",
    "lln_report",
    "monte_carlo",
    "run_depth_stream",
    "sample_bucket_depth",
    "sample_coupled_pair",
    "sample_independent_approx",
    "theoretical_limits",
    "uniform_segment_family",
]
