"""Probability measures on finite sample spaces, finite mixtures of them,
product lifts, grouped-sample data generation, and mixture comparison.

All types are immutable after construction (arrays are marked read-only),
so values can be shared freely across threads/processes. Every operation
is pure given its inputs and, where randomness is involved, a seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    CapExceeded,
    DimensionMismatch,
    InvalidArgs,
    NonPositiveWeight,
    NotAProbability,
)

# Invariant tolerances.  PROB_SUM_TOL is the hard invariant on stored mass;
# WEIGHT_RENORM_WINDOW is the drift make_mixture silently repairs by exact
# renormalization; DEDUP_TOL (max-norm) separates genuine duplicates from
# nearby distinct components at double precision.
PROB_SUM_TOL = 1e-12
WEIGHT_RENORM_WINDOW = 1e-9
DEDUP_TOL = 1e-9

# Hard cap on dense product-space sizes, shared with the tensor module.
DEFAULT_TENSOR_CAP = 10_000_000


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Categorical:
    """A probability vector over a finite sample space of size ``d``.

    Invariants: all entries nonnegative and summing to 1 within
    ``PROB_SUM_TOL``; ``d >= 1``.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.shape[0] < 1:
            raise NotAProbability("probs must be a vector with at least one entry")
        if np.any(probs < 0.0):
            raise NotAProbability(f"negative entry in probability vector: {probs.min()}")
        mass = float(probs.sum())
        if abs(mass - 1.0) > PROB_SUM_TOL:
            raise NotAProbability(f"entries sum to {mass!r}, not 1 within {PROB_SUM_TOL}")
        object.__setattr__(self, "probs", _readonly(probs))

    @property
    def d(self) -> int:
        return self.probs.shape[0]

    def tv_distance(self, other: "Categorical") -> float:
        """Total variation distance, 0.5 * L1 on the mass vectors."""
        if self.d != other.d:
            raise DimensionMismatch(f"d={self.d} vs d={other.d}")
        return 0.5 * float(np.abs(self.probs - other.probs).sum())

    def __repr__(self) -> str:
        return f"Categorical(d={self.d}, probs={np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True, eq=False)
class Mixture:
    """A finite mixture: positive weights summing to 1 over pairwise
    distinct components sharing one sample space.

    Construct through :func:`make_mixture`, which repairs small weight
    drift and merges duplicate components; direct construction enforces
    the invariants strictly.
    """

    weights: np.ndarray
    components: tuple[Categorical, ...]

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        components = tuple(self.components)
        if weights.ndim != 1 or weights.shape[0] != len(components):
            raise DimensionMismatch(
                f"{weights.shape[0]} weights vs {len(components)} components"
            )
        if len(components) == 0:
            raise InvalidArgs("a mixture needs at least one component")
        if np.any(weights <= 0.0):
            raise NonPositiveWeight(f"weights must be positive, got {weights}")
        if abs(float(weights.sum()) - 1.0) > PROB_SUM_TOL:
            raise NotAProbability(f"weights sum to {float(weights.sum())!r}")
        d = components[0].d
        for c in components:
            if c.d != d:
                raise DimensionMismatch("components live on different sample spaces")
        for i in range(len(components)):
            for j in range(i + 1, len(components)):
                gap = float(np.abs(components[i].probs - components[j].probs).max())
                if gap <= DEDUP_TOL:
                    raise InvalidArgs(
                        f"components {i} and {j} coincide within {DEDUP_TOL}; "
                        "use make_mixture to merge duplicates"
                    )
        object.__setattr__(self, "weights", _readonly(weights))
        object.__setattr__(self, "components", components)

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return self.components[0].d

    def component_matrix(self) -> np.ndarray:
        """The d x m matrix whose columns are the component mass vectors."""
        return np.column_stack([c.probs for c in self.components])

    def __repr__(self) -> str:
        return f"Mixture(m={self.m}, d={self.d})"


@dataclass(frozen=True, eq=False)
class GroupedDataset:
    """N groups of n outcome indices, each group drawn iid from one latent
    component."""

    groups: np.ndarray
    d: int

    def __post_init__(self):
        groups = np.asarray(self.groups, dtype=np.int64)
        if groups.ndim != 2 or groups.shape[0] < 1 or groups.shape[1] < 1:
            raise InvalidArgs("groups must be a nonempty N x n index array")
        if self.d < 1:
            raise InvalidArgs("d must be >= 1")
        if groups.min() < 0 or groups.max() >= self.d:
            raise InvalidArgs(f"group indices must lie in [0, {self.d})")
        groups = groups.copy()
        groups.setflags(write=False)
        object.__setattr__(self, "groups", groups)

    @property
    def n(self) -> int:
        return self.groups.shape[1]

    @property
    def size(self) -> int:
        return self.groups.shape[0]


def make_mixture(weights, components, dedup_tol: float = DEDUP_TOL) -> Mixture:
    """Validate and normalize a mixture specification.

    Weights that sum to 1 within ``WEIGHT_RENORM_WINDOW`` are renormalized
    exactly; components closer than ``dedup_tol`` in max-norm are merged by
    summing their weights (first occurrence kept), enforcing the minimal
    representation.

    Raises:
        NonPositiveWeight: some weight <= 0.
        DimensionMismatch: length or sample-space mismatch.
        NotAProbability: a component fails its invariants, or the weights
            are not a probability vector even after the renormalization
            window.
    """
    weights = np.asarray(weights, dtype=float)
    comps = [c if isinstance(c, Categorical) else Categorical(np.asarray(c, dtype=float))
             for c in components]
    if weights.ndim != 1 or weights.shape[0] != len(comps):
        raise DimensionMismatch(f"{weights.shape} weights for {len(comps)} components")
    if len(comps) == 0:
        raise InvalidArgs("a mixture needs at least one component")
    d = comps[0].d
    for c in comps:
        if c.d != d:
            raise DimensionMismatch("components live on different sample spaces")
    if np.any(weights <= 0.0):
        raise NonPositiveWeight(f"weights must be positive, got {weights}")
    total = float(weights.sum())
    if abs(total - 1.0) > WEIGHT_RENORM_WINDOW:
        raise NotAProbability(f"weights sum to {total!r}, outside the renormalization window")
    weights = weights / total

    merged_w: list[float] = []
    merged_c: list[Categorical] = []
    for w, c in zip(weights, comps):
        for i, kept in enumerate(merged_c):
            if float(np.abs(kept.probs - c.probs).max()) <= dedup_tol:
                merged_w[i] += w
                break
        else:
            merged_w.append(float(w))
            merged_c.append(c)
    return Mixture(np.asarray(merged_w), tuple(merged_c))


def _kron_power(v: np.ndarray, r: int) -> np.ndarray:
    """Row-major r-fold Kronecker power of a vector."""
    return reduce(np.kron, [v] * r)


def product_lift(P: Mixture, r: int, cap: int = DEFAULT_TENSOR_CAP) -> Mixture:
    """Replace each component by its r-fold product measure.

    The lifted component is a Categorical over ``d**r`` outcomes whose mass
    at the flattened multi-index (j_1..j_r) is the product of the component
    masses; flattening is row-major over (j_1..j_r).

    Raises:
        CapExceeded: if ``d**r`` exceeds ``cap``.
    """
    if r < 1:
        raise InvalidArgs(f"lift order must be >= 1, got {r}")
    if P.d ** r > cap:
        raise CapExceeded(f"d**r = {P.d}**{r} exceeds cap {cap}")
    if r == 1:
        return P
    lifted = tuple(Categorical(_kron_power(c.probs, r)) for c in P.components)
    return Mixture(P.weights, lifted)


def sample_groups(P: Mixture, n: int, N: int, seed: int) -> GroupedDataset:
    """Draw N groups of n iid outcomes, each group from one component
    selected with the mixture weights. Bit-identical across runs for a
    fixed seed."""
    if n < 1 or N < 1:
        raise InvalidArgs(f"need n >= 1 and N >= 1, got n={n}, N={N}")
    rng = np.random.default_rng(seed)
    which = rng.choice(P.m, size=N, p=P.weights)
    groups = np.empty((N, n), dtype=np.int64)
    for i, comp in enumerate(P.components):
        rows = np.flatnonzero(which == i)
        if rows.size:
            groups[rows] = rng.choice(P.d, size=(rows.size, n), p=comp.probs)
    return GroupedDataset(groups, P.d)


def mixture_match_distance(P: Mixture, Q: Mixture) -> float:
    """Distance between mixtures up to component relabeling.

    Returns ``inf`` when the component counts differ. Otherwise pairs the
    components by a minimum-total-TV assignment and returns the larger of
    the worst weight discrepancy and the worst component TV distance under
    that pairing. Zero exactly when the mixtures agree up to permutation
    (within tolerances); symmetric by the symmetry of the assignment.
    """
    if P.d != Q.d:
        raise DimensionMismatch(f"d={P.d} vs d={Q.d}")
    if P.m != Q.m:
        return math.inf
    cost = np.array(
        [[p.tv_distance(q) for q in Q.components] for p in P.components]
    )
    rows, cols = linear_sum_assignment(cost)
    tv_worst = float(cost[rows, cols].max())
    w_worst = float(np.abs(P.weights[rows] - Q.weights[cols]).max())
    return max(tv_worst, w_worst)
