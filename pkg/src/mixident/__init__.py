"""mixident: a numerical laboratory for grouped-sample mixture identifiability.

Finite mixtures over finite sample spaces are identifiable from groups of
n samples exactly when n clears bounds governed by the number of
components m and the independence degree k of the component family. This
package computes the grouped-sample moment tensors, measures
k-independence, certifies identifiability above the bounds by explicit
recovery, and constructs explicit counterexamples below them.
"""

from .core import (
    Categorical,
    GroupedDataset,
    Mixture,
    make_mixture,
    mixture_match_distance,
    product_lift,
    sample_groups,
)
from .counterexamples import (
    CounterexamplePair,
    bernoulli_determinedness_match,
    bernoulli_moment_match,
    build_nondetermined,
    build_nonidentifiable,
)
from .errors import (
    CapExceeded,
    ContinuationStalled,
    DependentSubset,
    DimensionMismatch,
    GenerationFailed,
    InvalidArgs,
    InvalidRegion,
    MixidentError,
    NTooSmall,
    NoConvergence,
    NonPositiveWeight,
    NotAProbability,
    RankDeficientModes,
    SeparationLost,
    ShapeMismatch,
    SplitMismatch,
    TooManyColumns,
    VerificationFailed,
)
from .identifiability import (
    BoundVerdict,
    CertificationReport,
    KruskalCondition,
    RecoveryTrial,
    balanced_split,
    bound_verdict,
    certify_identifiability,
    kruskal_condition,
    recover_mixture,
    search_alternative,
)
from .randomcheck import (
    MonteCarloReport,
    monte_carlo_independence,
    random_k_independent_mixture,
    sample_simplex,
)
from .rank import (
    KruskalReport,
    PowerRankReport,
    VectorFamily,
    dual_vectors,
    kruskal_rank,
    numerical_rank,
    verify_kindpow,
    verify_kpindpow,
)
from .tensor import (
    MomentTensor,
    Split3,
    empirical_moment_tensor,
    flatten3,
    frobenius_distance,
    kron_power,
    marginalize_last,
    moment_tensor,
    unflatten3,
)

__version__ = "0.1.0"

__all__ = [
    "Categorical", "GroupedDataset", "Mixture", "make_mixture",
    "mixture_match_distance", "product_lift", "sample_groups",
    "MomentTensor", "Split3", "empirical_moment_tensor", "flatten3",
    "frobenius_distance", "kron_power", "marginalize_last", "moment_tensor",
    "unflatten3",
    "KruskalReport", "PowerRankReport", "VectorFamily", "dual_vectors",
    "kruskal_rank", "numerical_rank", "verify_kindpow", "verify_kpindpow",
    "BoundVerdict", "CertificationReport", "KruskalCondition", "RecoveryTrial",
    "balanced_split", "bound_verdict", "certify_identifiability",
    "kruskal_condition", "recover_mixture", "search_alternative",
    "CounterexamplePair", "bernoulli_determinedness_match",
    "bernoulli_moment_match", "build_nondetermined", "build_nonidentifiable",
    "MonteCarloReport", "monte_carlo_independence",
    "random_k_independent_mixture", "sample_simplex",
    "MixidentError", "InvalidArgs", "NonPositiveWeight", "DimensionMismatch",
    "NotAProbability", "CapExceeded", "SplitMismatch", "ShapeMismatch",
    "TooManyColumns", "DependentSubset", "NTooSmall", "RankDeficientModes",
    "NoConvergence", "ContinuationStalled", "SeparationLost", "InvalidRegion",
    "VerificationFailed", "GenerationFailed",
]
