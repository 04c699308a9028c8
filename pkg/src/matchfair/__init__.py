"""matchfair: stable-matching fairness toolkit.

Deferred acceptance, exhaustive stable-lattice enumeration via break-marriage,
rotation-poset analysis, Mallows preference sampling, sex-equal matching
search, and a Monte-Carlo experiment harness with bootstrap CIs.
"""

from .core import (
    Matching,
    PreferenceProfile,
    WelfareScores,
    egalitarian_cost,
    find_blocking_pairs,
    is_stable,
    rank,
    sex_equality_cost,
    welfare,
)
from .deferred_acceptance import (
    DaTrace,
    ProposingSide,
    choose_proposing_side,
    da_star,
    da_star_estimated,
    deferred_acceptance,
)
from .errors import (
    BudgetExceededError,
    DegenerateDistributionError,
    InvalidAgentError,
    InvalidInputError,
    InvalidMatchingError,
    MatchfairError,
    RotationNotExposedError,
)
from .fairness import (
    ClassifiedInstance,
    LemmaCase,
    SearchResult,
    classify_instance,
    ibils_search,
    sex_equal_exhaustive,
    welfare_gap,
)
from .lattice import (
    Rotation,
    RotationPoset,
    Shortlists,
    StableLattice,
    build_rotation_poset,
    build_shortlists,
    count_downsets,
    dominates,
    downset_check,
    eliminate_rotation,
    enumerate_lattice,
    find_exposed_rotations,
    max_downsets_bound,
)
from .mallows import (
    MallowsParams,
    RngSeed,
    estimate_phi,
    expected_kendall_distance,
    generate_profile,
    kendall_tau,
    mallows_probability,
    normalization_constant,
    sample_permutation,
    sample_permutations,
    substream_rng,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "ClassifiedInstance",
    "DaTrace",
    "DegenerateDistributionError",
    "InvalidAgentError",
    "InvalidInputError",
    "InvalidMatchingError",
    "LemmaCase",
    "MallowsParams",
    "Matching",
    "MatchfairError",
    "PreferenceProfile",
    "ProposingSide",
    "RngSeed",
    "Rotation",
    "RotationNotExposedError",
    "RotationPoset",
    "SearchResult",
    "Shortlists",
    "StableLattice",
    "WelfareScores",
    "choose_proposing_side",
    "classify_instance",
    "count_downsets",
    "da_star",
    "da_star_estimated",
    "deferred_acceptance",
    "dominates",
    "downset_check",
    "build_rotation_poset",
    "build_shortlists",
    "egalitarian_cost",
    "eliminate_rotation",
    "enumerate_lattice",
    "estimate_phi",
    "expected_kendall_distance",
    "find_blocking_pairs",
    "find_exposed_rotations",
    "generate_profile",
    "ibils_search",
    "is_stable",
    "kendall_tau",
    "mallows_probability",
    "max_downsets_bound",
    "normalization_constant",
    "rank",
    "sample_permutation",
    "sample_permutations",
    "sex_equal_exhaustive",
    "sex_equality_cost",
    "substream_rng",
    "welfare",
    "welfare_gap",
]
