"""Differentially private best subset selection.

Thin Python surface over the C++ core: synthetic data generation, the
l1-truncated subset score, the exact exponential mechanism, the double-swap
Metropolis-Hastings sampler, and the mixing/margin diagnostics.
"""

from _dpbss import (
    ChainTrace,
    Dataset,
    ExactDistribution,
    ScoreResult,
    StepRecord,
    TransitionMatrix,
    approx_dp_delta,
    build_transition_matrix,
    constrained_rss,
    dp_ratio_audit,
    empirical_tv_vs_exact,
    estimate_src,
    exact_distribution,
    exact_sample,
    f_score,
    generate_synthetic,
    identifiability_margin,
    measure_mixing,
    ols_rss,
    recommended_k,
    run_chain,
    run_parallel_chains,
    score,
    sensitivity_bound,
    spectral_gap,
    validate_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "ChainTrace",
    "Dataset",
    "ExactDistribution",
    "ScoreResult",
    "StepRecord",
    "TransitionMatrix",
    "approx_dp_delta",
    "build_transition_matrix",
    "constrained_rss",
    "dp_ratio_audit",
    "empirical_tv_vs_exact",
    "estimate_src",
    "exact_distribution",
    "exact_sample",
    "f_score",
    "generate_synthetic",
    "identifiability_margin",
    "measure_mixing",
    "ols_rss",
    "recommended_k",
    "run_chain",
    "run_parallel_chains",
    "score",
    "sensitivity_bound",
    "spectral_gap",
    "validate_bounds",
]
