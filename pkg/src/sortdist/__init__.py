"""sortdist: sorted-distribution estimation and its supporting numerics."""

from .core import (
    AtomicMeasure,
    DiscreteDistribution,
    Histogram,
    Profile,
    binomial_pmf,
    enumerate_profiles,
    histogram_of_samples,
    measure_of,
    poisson_pmf,
    poisson_tail,
    profile_of_histogram,
    profile_probability,
    sorted_l1,
)
from .harness import ExperimentConfig, TrialRecord, make_distribution, run_benchmark
from .intervals import IntervalScheme, build_scheme, locate, localization_check
from .lmm import (
    EstimateResult,
    LPInstance,
    build_lp,
    estimate_sorted_distribution,
    solve_lp,
    surrogate_loss,
)
from .moments import (
    MomentTable,
    effective_support,
    g_eval,
    g_tilde_eval,
    smoothed_moment_estimate,
    smoothed_moment_true,
)
from .pml import (
    ChainParams,
    QuantGrid,
    brute_force_pml,
    chain_params,
    check_goodset_lemma,
    chi_m_poisson,
    good_set,
    is_close,
    min_prob_round,
    quantize_to_grid,
)
from .poisson_approx import (
    PoissonPolynomial,
    build_poisson_approximation,
    glue,
    jackson_approx,
    monomial_to_poisson,
    truncate_local,
    verify_bounds,
)
from .sampling import empirical_measure, sample_iid, sample_poissonized, substream
from .wasserstein import LipschitzWitness, dual_value, optimal_witness, w1

__all__ = [
    "AtomicMeasure",
    "ChainParams",
    "DiscreteDistribution",
    "EstimateResult",
    "ExperimentConfig",
    "Histogram",
    "IntervalScheme",
    "LPInstance",
    "LipschitzWitness",
    "MomentTable",
    "PoissonPolynomial",
    "Profile",
    "QuantGrid",
    "TrialRecord",
    "binomial_pmf",
    "brute_force_pml",
    "build_lp",
    "build_poisson_approximation",
    "build_scheme",
    "chain_params",
    "check_goodset_lemma",
    "chi_m_poisson",
    "dual_value",
    "effective_support",
    "empirical_measure",
    "enumerate_profiles",
    "estimate_sorted_distribution",
    "g_eval",
    "g_tilde_eval",
    "glue",
    "good_set",
    "histogram_of_samples",
    "is_close",
    "jackson_approx",
    "locate",
    "localization_check",
    "make_distribution",
    "measure_of",
    "min_prob_round",
    "monomial_to_poisson",
    "optimal_witness",
    "poisson_pmf",
    "poisson_tail",
    "profile_of_histogram",
    "profile_probability",
    "quantize_to_grid",
    "run_benchmark",
    "sample_iid",
    "sample_poissonized",
    "smoothed_moment_estimate",
    "smoothed_moment_true",
    "solve_lp",
    "sorted_l1",
    "substream",
    "surrogate_loss",
    "truncate_local",
    "verify_bounds",
    "w1",
]
