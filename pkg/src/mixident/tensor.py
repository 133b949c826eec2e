"""Dense grouped-sample moment tensors and their flattenings.

The moment tensor of a mixture at group size n is the weighted sum of the
n-fold outer products of its components: entry (j_1..j_n) is
``sum_i a_i * prod_t mu_i(j_t)``. It is exactly the distribution of a
group of n samples, stored dense in row-major multi-index order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .core import DEFAULT_TENSOR_CAP, GroupedDataset, Mixture, _kron_power, _readonly
from .errors import (
    CapExceeded,
    InvalidArgs,
    NotAProbability,
    ShapeMismatch,
    SplitMismatch,
)

MASS_TOL = 1e-10  # tolerance on total mass of a moment tensor
SYMMETRY_TOL = 1e-12  # tolerance on invariance under adjacent index swaps


@dataclass(frozen=True, eq=False)
class MomentTensor:
    """Order-n, dimension-d tensor of grouped-sample probabilities.

    ``entries`` has shape ``(d,) * n`` (row-major). Entries are
    nonnegative, sum to 1 within ``MASS_TOL``, and the tensor is invariant
    under index permutations within ``SYMMETRY_TOL`` (checked on the
    adjacent transpositions, which generate all permutations).
    """

    entries: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.entries, dtype=float)
        if t.ndim < 1:
            raise InvalidArgs("a moment tensor needs order >= 1")
        d = t.shape[0]
        if any(s != d for s in t.shape):
            raise InvalidArgs(f"all modes must have equal size, got shape {t.shape}")
        if np.any(t < -SYMMETRY_TOL):
            raise NotAProbability(f"negative entry {t.min()} in moment tensor")
        mass = float(t.sum())
        if abs(mass - 1.0) > MASS_TOL:
            raise NotAProbability(f"entries sum to {mass!r}, not 1 within {MASS_TOL}")
        for axis in range(t.ndim - 1):
            perm = list(range(t.ndim))
            perm[axis], perm[axis + 1] = perm[axis + 1], perm[axis]
            if float(np.abs(t - t.transpose(perm)).max()) > SYMMETRY_TOL:
                raise InvalidArgs(f"tensor not symmetric under swap of axes {axis},{axis + 1}")
        object.__setattr__(self, "entries", _readonly(t))

    @property
    def order(self) -> int:
        return self.entries.ndim

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __repr__(self) -> str:
        return f"MomentTensor(order={self.order}, dim={self.dim})"


@dataclass(frozen=True)
class Split3:
    """A balanced three-way split n = n1 + n2 + n3 with n1 <= n2 <= n3 <= n1 + 1."""

    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        parts = (self.n1, self.n2, self.n3)
        if any(p < 1 for p in parts):
            raise InvalidArgs(f"split parts must be positive, got {parts}")
        if not (self.n1 <= self.n2 <= self.n3 <= self.n1 + 1):
            raise InvalidArgs(f"split {parts} is not balanced")

    @property
    def total(self) -> int:
        return self.n1 + self.n2 + self.n3


def _check_cap(d: int, r: int, cap: int) -> None:
    if d ** r > cap:
        raise CapExceeded(f"dense size d**r = {d}**{r} exceeds cap {cap}")


def kron_power(v, r: int, cap: int = DEFAULT_TENSOR_CAP) -> np.ndarray:
    """Row-major r-fold Kronecker power: entry (j_1..j_r) = prod_t v[j_t]."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidArgs("kron_power expects a vector")
    if r < 1:
        raise InvalidArgs(f"power must be >= 1, got {r}")
    _check_cap(v.shape[0], r, cap)
    return _kron_power(v, r)


def _outer_power(v: np.ndarray, n: int) -> np.ndarray:
    """Shaped n-fold outer power, shape (d,) * n."""
    return reduce(np.multiply.outer, [v] * n)


def moment_tensor(P: Mixture, n: int, cap: int = DEFAULT_TENSOR_CAP) -> MomentTensor:
    """The distribution of a group of n samples from P, as a dense tensor."""
    if n < 1:
        raise InvalidArgs(f"group size must be >= 1, got {n}")
    _check_cap(P.d, n, cap)
    t = np.zeros((P.d,) * n)
    for w, comp in zip(P.weights, P.components):
        t += w * _outer_power(comp.probs, n)
    return MomentTensor(t)


def empirical_moment_tensor(data: GroupedDataset, symmetrize: bool = True):
    """Empirical group-frequency tensor of a grouped dataset.

    With ``symmetrize`` (default), the count tensor is averaged over all
    index permutations and returned as a :class:`MomentTensor`; groups are
    exchangeable under the model, so the averaging reduces variance
    without bias. With ``symmetrize=False`` the raw frequency array is
    returned instead (it is generally not permutation-symmetric, so it
    cannot carry the MomentTensor invariants).
    """
    import itertools

    d, n, N = data.d, data.n, data.size
    strides = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    flat = data.groups @ strides
    counts = np.bincount(flat, minlength=d ** n).astype(float)
    t = counts.reshape((d,) * n) / N
    if not symmetrize:
        return t
    if n > 1:
        acc = np.zeros_like(t)
        k = 0
        for perm in itertools.permutations(range(n)):
            acc += t.transpose(perm)
            k += 1
        t = acc / k
    return MomentTensor(t)


def flatten3(T: MomentTensor, s: Split3) -> np.ndarray:
    """Reshape an order-n tensor to order 3 with mode sizes
    (d**n1, d**n2, d**n3) by row-major grouping of the first n1, next n2,
    and last n3 indices. Pure re-indexing, no arithmetic."""
    if s.total != T.order:
        raise SplitMismatch(f"split totals {s.total} but tensor order is {T.order}")
    d = T.dim
    return T.entries.reshape(d ** s.n1, d ** s.n2, d ** s.n3)


def unflatten3(W: np.ndarray, s: Split3, d: int) -> MomentTensor:
    """Inverse of :func:`flatten3` for a dimension-d base space."""
    W = np.asarray(W, dtype=float)
    if W.shape != (d ** s.n1, d ** s.n2, d ** s.n3):
        raise SplitMismatch(f"array shape {W.shape} does not match split {s} over d={d}")
    return MomentTensor(W.reshape((d,) * s.total))


def frobenius_distance(T1: MomentTensor, T2: MomentTensor) -> float:
    """Square root of the sum of squared entry differences."""
    if T1.order != T2.order or T1.dim != T2.dim:
        raise ShapeMismatch(
            f"(order={T1.order}, dim={T1.dim}) vs (order={T2.order}, dim={T2.dim})"
        )
    return float(np.linalg.norm(T1.entries - T2.entries))


def marginalize_last(T: MomentTensor) -> MomentTensor:
    """Sum out the last index: the group-size-(n-1) tensor of the same mixture."""
    if T.order < 2:
        raise InvalidArgs("cannot marginalize an order-1 tensor")
    return MomentTensor(T.entries.sum(axis=-1))
