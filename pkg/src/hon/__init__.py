"""Higher-order networks built from sequential trajectory data."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    DanglingPrefix,
    EmptyInput,
    HONError,
    InfeasibleConfig,
    MalformedLine,
    NonConvergence,
    SupportViolation,
    UniverseMismatch,
    UnknownEntity,
)
from .ingest import Trajectory, extract_subsequences, parse_trajectories, read_trajectories
from .network import (
    HONetwork,
    HONode,
    build_first_order,
    build_fixed_order,
    build_network,
    make_builder,
    project_first_order,
)
from .rank import RankVector, aggregate_scores, pagerank, rank_delta
from .rules import (
    ExtractionParams,
    RuleSet,
    build_distributions,
    build_observations,
    extract_rules,
    kl_divergence,
    significance_threshold,
)
from .walk import (
    AccuracyReport,
    WalkState,
    entropy_rate,
    evaluate_accuracy,
    locate_context,
    return_probability,
    simulate_walk,
    stationary_distribution,
    transition_distribution,
)
