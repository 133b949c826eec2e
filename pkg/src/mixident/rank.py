"""Numerical linear algebra for k-independence.

A family of vectors is k-independent when every size-k subfamily is
linearly independent; the Kruskal rank is the largest such k. Ranks are
measured through singular values with a scale-free relative threshold,
and Kruskal ranks by exhaustive subset enumeration (exact per the
definition, no randomized estimation).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TENSOR_CAP, _readonly
from .errors import DependentSubset, InvalidArgs, TooManyColumns
from .tensor import kron_power

DEFAULT_REL_TOL = 1e-9
MAX_ENUM_COLUMNS = 22  # subset enumeration bound
ZERO_COLUMN_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class VectorFamily:
    """An ordered family of m nonzero column vectors of equal dimension.

    Duplicates are allowed (the family is a sequence, not a set); a
    duplicated column simply caps the Kruskal rank at 1.
    """

    vectors: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] < 1:
            raise InvalidArgs("vectors must be a D x m matrix with m >= 1")
        norms = np.linalg.norm(v, axis=0)
        if np.any(norms <= ZERO_COLUMN_TOL):
            raise InvalidArgs("zero column in vector family")
        if self.labels is not None and len(self.labels) != v.shape[1]:
            raise InvalidArgs("one label per column required")
        object.__setattr__(self, "vectors", _readonly(v))

    @classmethod
    def from_columns(cls, columns, labels=None) -> "VectorFamily":
        return cls(np.column_stack([np.asarray(c, dtype=float) for c in columns]),
                   tuple(labels) if labels is not None else None)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def size(self) -> int:
        return self.vectors.shape[1]

    def power_family(self, n: int, cap: int = DEFAULT_TENSOR_CAP) -> "VectorFamily":
        """The family of columnwise n-fold Kronecker powers."""
        return VectorFamily(
            np.column_stack([kron_power(self.vectors[:, j], n, cap=cap)
                             for j in range(self.size)]),
            self.labels,
        )


@dataclass(frozen=True)
class KruskalReport:
    """Measured Kruskal rank with its numerical evidence.

    ``witness`` is the lexicographically first dependent subset of size
    k + 1 (present exactly when k < m). ``min_sv_at_k`` is the smallest
    singular value over all size-k subsets (all of which passed);
    ``max_sv_ratio_at_k_plus_1`` is the witness subset's sigma_min/sigma_max,
    the dependence evidence.
    """

    k: int
    witness: tuple[int, ...] | None
    min_sv_at_k: float
    max_sv_ratio_at_k_plus_1: float | None


def _singular_values(mat: np.ndarray) -> np.ndarray:
    return np.linalg.svd(mat, compute_uv=False)


def _rank_from_sv(sv: np.ndarray, rel_tol: float) -> int:
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def _check_rel_tol(rel_tol: float) -> None:
    if not (0.0 < rel_tol < 1.0):
        raise InvalidArgs(f"rel_tol must lie in (0, 1), got {rel_tol}")


def numerical_rank(F: VectorFamily, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Number of singular values above rel_tol times the largest one."""
    _check_rel_tol(rel_tol)
    return _rank_from_sv(_singular_values(F.vectors), rel_tol)


def kruskal_rank(F: VectorFamily, rel_tol: float = DEFAULT_REL_TOL) -> KruskalReport:
    """Largest k such that every size-k column subset is independent.

    Brute force over subsets in lexicographic order, short-circuiting at
    the first dependent subset per size. Bounded to ``MAX_ENUM_COLUMNS``
    columns.
    """
    _check_rel_tol(rel_tol)
    if F.size > MAX_ENUM_COLUMNS:
        raise TooManyColumns(f"{F.size} columns exceeds enumeration bound {MAX_ENUM_COLUMNS}")
    kmax = min(F.dim, F.size)
    min_sv_prev = float(np.linalg.norm(F.vectors[:, 0]))  # size-0 placeholder
    # Sizes beyond kmax+1 never need checking: either every size passes up
    # to kmax (k = kmax), or some size-(k+1) subset with k < kmax fails first.
    for size in range(1, min(kmax + 1, F.size) + 1):
        min_sv_here = np.inf
        for subset in itertools.combinations(range(F.size), size):
            sv = _singular_values(F.vectors[:, subset])
            if _rank_from_sv(sv, rel_tol) < size:
                ratio = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
                return KruskalReport(
                    k=size - 1,
                    witness=subset,
                    min_sv_at_k=float(min_sv_prev),
                    max_sv_ratio_at_k_plus_1=ratio,
                )
            min_sv_here = min(min_sv_here, float(sv[-1]))
        min_sv_prev = min_sv_here
    return KruskalReport(k=kmax, witness=None, min_sv_at_k=float(min_sv_prev),
                         max_sv_ratio_at_k_plus_1=None)


def dual_vectors(F: VectorFamily, subset, rel_tol: float = DEFAULT_REL_TOL) -> list[np.ndarray]:
    """A dual system for the selected columns: vectors z_1..z_s with
    <x_subset[i], z_j> = delta_ij.

    Computed from the pseudo-inverse of the selected column block. To
    force extra columns to be annihilated, include them in ``subset`` and
    read off the duals of the columns of interest.

    Raises:
        DependentSubset: the selected columns are not numerically
            independent at ``rel_tol``.
    """
    subset = tuple(int(i) for i in subset)
    if len(subset) == 0:
        raise InvalidArgs("subset must be nonempty")
    block = F.vectors[:, subset]
    if _rank_from_sv(_singular_values(block), rel_tol) < len(subset):
        raise DependentSubset(f"columns {subset} are dependent at rel_tol={rel_tol}")
    duals = np.linalg.pinv(block).T
    return [duals[:, j].copy() for j in range(len(subset))]


@dataclass(frozen=True)
class PowerRankReport:
    """Outcome of checking a tensor-power independence bound.

    ``expected`` is the guaranteed lower bound on the Kruskal rank of the
    power family, ``measured`` the rank actually found; the guarantee is
    one-sided, so ``passed`` tests measured >= expected (equality is only
    generic).
    """

    m: int
    n: int
    k: int
    k_prime: int | None
    expected: int
    measured: int
    passed: bool


def verify_kindpow(F: VectorFamily, n: int, rel_tol: float = DEFAULT_REL_TOL,
                   cap: int = DEFAULT_TENSOR_CAP) -> PowerRankReport:
    """Check that n-fold Kronecker powers of a k-independent family are
    min(n(k-1)+1, m)-independent.

    Requires the measured k >= 2 (any family of distinct nonzero vectors
    has k >= 2 unless two columns are proportional).
    """
    if n < 1:
        raise InvalidArgs(f"power must be >= 1, got {n}")
    k = kruskal_rank(F, rel_tol).k
    if k < 2:
        raise InvalidArgs(f"family has Kruskal rank {k}; the bound needs k >= 2")
    expected = min(n * (k - 1) + 1, F.size)
    measured = kruskal_rank(F.power_family(n, cap=cap), rel_tol).k
    return PowerRankReport(m=F.size, n=n, k=k, k_prime=None, expected=expected,
                           measured=measured, passed=measured >= expected)


def verify_kpindpow(x, F: VectorFamily, n: int, rel_tol: float = DEFAULT_REL_TOL,
                    cap: int = DEFAULT_TENSOR_CAP) -> PowerRankReport:
    """Check the mixed-power independence bound for one extra vector.

    With F k-independent and the extended family (x, F) k'-independent
    (k' capped at k; the bound holds a fortiori when the measured extended
    rank exceeds k), the extended power family must be
    min(m+1, (n-1)(k-1)+k')-independent.
    """
    if n < 1:
        raise InvalidArgs(f"power must be >= 1, got {n}")
    x = np.asarray(x, dtype=float)
    k = kruskal_rank(F, rel_tol).k
    if k < 2:
        raise InvalidArgs(f"family has Kruskal rank {k}; the bound needs k >= 2")
    extended = VectorFamily(np.column_stack([x, F.vectors]))
    k_prime = min(kruskal_rank(extended, rel_tol).k, k)
    if k_prime < 2:
        raise InvalidArgs(f"extended family has Kruskal rank {k_prime}; need k' >= 2")
    expected = min(F.size + 1, (n - 1) * (k - 1) + k_prime)
    measured = kruskal_rank(extended.power_family(n, cap=cap), rel_tol).k
    return PowerRankReport(m=F.size, n=n, k=k, k_prime=k_prime, expected=expected,
                           measured=measured, passed=measured >= expected)
