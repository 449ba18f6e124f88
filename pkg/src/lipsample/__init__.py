"""Sampling estimators of local Lipschitz constants for ReLU networks."""

from .domain import Box, RegionStats, init_subregions, sample_uniform, subdivide, update_stats
from .estimators import (
    Algorithm,
    EstimateReport,
    EstimatorConfig,
    estimate,
    estimate_partitioned,
    estimate_ucb,
    estimate_uniform,
    sample_value,
    sample_values,
    ucb_score,
)
from .net import AffineLayer, EvalTape, Mlp, activation_pattern, clarke_jacobian, forward, init_mlp, load_mlp, save_mlp
from .norms import NormPair, NormTag, dual, induced_norm, vector_norm

__version__ = "0.1.0"
