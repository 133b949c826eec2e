"""Constructive witnesses for the two lower-bound theorems.

The base objects are pairs of two-outcome (Bernoulli) mixtures whose
success-probability power moments agree up to a prescribed order. Degrees
of freedom: a mixture with c components has 2c - 1 free parameters, so
matching J moments leaves a (2c - 1 - J)-dimensional solution manifold;
the solver walks that manifold away from the starting mixture by
predictor-corrector continuation (kernel-direction step, Newton
correction back onto the constraint set).

Product-lifting the base pair by r = k - 1 then yields k-independent
component families over 2**r outcomes whose group-size-n moment tensors
still coincide whenever (k - 1) n is at most the matched moment order,
which is exactly the lower-bound construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_TENSOR_CAP,
    Categorical,
    Mixture,
    mixture_match_distance,
    product_lift,
)
from .errors import (
    CapExceeded,
    ContinuationStalled,
    InvalidArgs,
    InvalidRegion,
    SeparationLost,
    VerificationFailed,
)
from .rank import DEFAULT_REL_TOL, VectorFamily, kruskal_rank
from .tensor import frobenius_distance, moment_tensor

MAX_BASE_M_IDENT = 8  # moment-system conditioning degrades beyond this
MAX_BASE_M_DET = 7
PROB_LO, PROB_HI = 0.05, 0.95  # base success-probability range
MIN_PROB_GAP = 0.08  # separation floor for generated bases
MIN_WEIGHT = 0.05  # weight floor for generated bases
FEAS_EPS = 1e-4  # hard feasibility clamp for emitted parameters
SEP_FLOOR = 1e-3  # collision threshold during the walk
NEWTON_TOL = 1e-12
STEP = 0.02
MAX_STEPS = 400
MATCH_TARGET = 5e-3  # walk until the base pair differs by at least this
BASE_TENSOR_GAP_MIN = 1e-6  # required tensor gap at the first unmatched order
BASE_SEED_RETRIES = 10


# ---------------------------------------------------------------------------
# Bernoulli moment algebra
# ---------------------------------------------------------------------------

def success_probabilities(mix: Mixture) -> np.ndarray:
    """The per-component success probabilities of a two-outcome mixture."""
    if mix.d != 2:
        raise InvalidArgs(f"expected a two-outcome mixture, got d={mix.d}")
    return np.array([c.probs[1] for c in mix.components])


def power_moments(weights: np.ndarray, probs: np.ndarray, order: int) -> np.ndarray:
    """Moments sum_i a_i p_i**j for j = 1..order."""
    js = np.arange(1, order + 1)
    return (weights[None, :] * probs[None, :] ** js[:, None]).sum(axis=1)


def mixture_power_moments(mix: Mixture, order: int) -> np.ndarray:
    return power_moments(np.asarray(mix.weights), success_probabilities(mix), order)


def base_tensor_gap(P: Mixture, Q: Mixture, order_next: int) -> float:
    """Frobenius distance of the group-size-``order_next`` tensors of a pair
    whose moments match below that order.

    When all moments of order < J agree, every entry of the order-J
    two-outcome tensors differs by exactly +/- the order-J moment gap, so
    the Frobenius distance is 2**(J/2) times that gap. Evaluating it in
    this closed form avoids building the dense tensor.
    """
    gap = abs(mixture_power_moments(P, order_next)[-1]
              - mixture_power_moments(Q, order_next)[-1])
    return float(2.0 ** (order_next / 2.0) * gap)


def _constraints(theta: np.ndarray, c: int, targets: np.ndarray) -> np.ndarray:
    """[sum(a) - 1, moments(theta) - targets]; theta = (a_1..a_c, p_1..p_c)."""
    a, p = theta[:c], theta[c:]
    return np.concatenate(([a.sum() - 1.0],
                           power_moments(a, p, targets.shape[0]) - targets))


def _constraint_jacobian(theta: np.ndarray, c: int, order: int) -> np.ndarray:
    a, p = theta[:c], theta[c:]
    jac = np.zeros((order + 1, 2 * c))
    jac[0, :c] = 1.0
    js = np.arange(1, order + 1)
    jac[1:, :c] = p[None, :] ** js[:, None]
    jac[1:, c:] = a[None, :] * js[:, None] * p[None, :] ** (js[:, None] - 1)
    return jac


def _newton_correct(theta: np.ndarray, c: int, targets: np.ndarray,
                    max_iter: int = 25) -> np.ndarray:
    """Newton-iterate theta back onto the constraint manifold.

    Pushes the residual as close to machine precision as it will go and
    returns the best iterate seen, provided it clears ``NEWTON_TOL``.
    """
    theta = theta.copy()
    best_theta = theta.copy()
    best_err = float(np.abs(_constraints(theta, c, targets)).max())
    for _ in range(max_iter):
        g = _constraints(theta, c, targets)
        err = float(np.abs(g).max())
        if err < best_err:
            best_err = err
            best_theta = theta.copy()
        if err < 1e-14:
            break
        delta = np.linalg.lstsq(_constraint_jacobian(theta, c, targets.shape[0]),
                                -g, rcond=None)[0]
        if float(np.linalg.norm(delta)) < 1e-16:
            break
        theta = theta + delta
    err = float(np.abs(_constraints(theta, c, targets)).max())
    if err < best_err:
        best_err = err
        best_theta = theta
    if best_err < NEWTON_TOL:
        return best_theta
    raise ContinuationStalled(f"Newton correction stalled at residual {best_err:.3e}")


def _kernel_basis(jac: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) for the nominal kernel of the constraint
    Jacobian: the trailing right-singular directions, as many as the
    parameter surplus over the constraint count."""
    _, _, vt = np.linalg.svd(jac)
    q = max(jac.shape[1] - jac.shape[0], 1)
    return vt[-q:].T


def _feasible(theta: np.ndarray, c: int, weight_lo: float) -> bool:
    a, p = theta[:c], theta[c:]
    if np.any(a < weight_lo):
        return False
    if np.any(p < FEAS_EPS) or np.any(p > 1.0 - FEAS_EPS):
        return False
    gaps = np.abs(p[:, None] - p[None, :])[np.triu_indices(c, k=1)]
    return bool(gaps.min() >= SEP_FLOOR) if gaps.size else True


def _steer_continuity(theta, null, prev_dir):
    """Follow the kernel along the previous direction of travel."""
    step_dir = null @ (null.T @ prev_dir)
    norm = float(np.linalg.norm(step_dir))
    if norm < 1e-10:
        step_dir, norm = null[:, 0], 1.0
    step_dir = step_dir / norm
    if float(step_dir @ prev_dir) < 0.0:
        step_dir = -step_dir
    return step_dir


def _steer_lift(index: int):
    """Steer along the kernel direction that grows coordinate ``index``
    fastest (falling back to continuity when the kernel is orthogonal to
    it, e.g. while sliding along a feasibility wall)."""

    def steer(theta, null, prev_dir):
        step_dir = null @ null[index, :]
        norm = float(np.linalg.norm(step_dir))
        if norm < 1e-8:
            return _steer_continuity(theta, null, prev_dir)
        step_dir = step_dir / norm
        if step_dir[index] < 0.0:
            step_dir = -step_dir
        return step_dir

    return steer


def _walk(theta0: np.ndarray, c: int, targets: np.ndarray, direction: np.ndarray,
          stop, weight_lo: float, steer=_steer_continuity) -> np.ndarray:
    """Predictor-corrector walk along the constraint kernel.

    ``steer(theta, kernel_basis, prev_dir)`` picks the tangent direction;
    ``stop(theta)`` returns True once the walk has gone far enough;
    ``weight_lo`` is the weight floor enforced on accepted iterates. Steps
    are halved when the corrected point leaves the feasible box (grazing a
    wall obliquely is allowed, crossing it is not). The walk ends at the
    last feasible point when no further progress is possible; it raises
    only if it never moved at all.
    """
    theta = theta0.copy()
    prev_dir = direction / np.linalg.norm(direction)
    moved = False
    for _ in range(MAX_STEPS):
        if stop(theta):
            return theta
        jac = _constraint_jacobian(theta, c, targets.shape[0])
        null = _kernel_basis(jac)
        step_dir = steer(theta, null, prev_dir)
        advanced = False
        step = STEP
        for _ in range(6):
            try:
                candidate = _newton_correct(theta + step * step_dir, c, targets)
            except ContinuationStalled:
                step *= 0.5
                continue
            advance = candidate - theta
            advance_norm = float(np.linalg.norm(advance))
            if _feasible(candidate, c, weight_lo) and advance_norm > 1e-12:
                prev_dir = advance / advance_norm
                theta = candidate
                moved = True
                advanced = True
                break
            step *= 0.5
        if not advanced:
            if moved:
                return theta
            raise SeparationLost("walk cannot leave the starting point feasibly")
    return theta


def _build_mixture(a: np.ndarray, p: np.ndarray) -> Mixture:
    comps = tuple(Categorical(np.array([1.0 - pi, pi])) for pi in p)
    return Mixture(a / a.sum(), comps)


def _random_base(m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Weights >= MIN_WEIGHT and success probabilities with pairwise gaps
    >= MIN_PROB_GAP, drawn uniformly over the feasible region."""
    span = (PROB_HI - PROB_LO) - (m - 1) * MIN_PROB_GAP
    if span <= 0:
        raise InvalidArgs(f"cannot separate {m} probabilities by {MIN_PROB_GAP}")
    offsets = np.sort(rng.uniform(0.0, span, size=m))
    probs = PROB_LO + offsets + MIN_PROB_GAP * np.arange(m)
    if m == 1:
        return np.ones(1), probs
    g = rng.exponential(1.0, size=m)
    weights = MIN_WEIGHT + (1.0 - m * MIN_WEIGHT) * (g / g.sum())
    return weights, probs


# ---------------------------------------------------------------------------
# Base pair constructions
# ---------------------------------------------------------------------------

def bernoulli_moment_match(m: int, seed: int = 0,
                           max_m: int = MAX_BASE_M_IDENT) -> tuple[Mixture, Mixture]:
    """A pair of distinct m-component two-outcome mixtures whose moments
    agree up to order 2m - 2 and differ at order 2m - 1.

    The parameter space has 2m - 1 degrees of freedom against 2m - 2
    constraints, so the solution manifold through any mixture is a curve;
    the solver walks it until the mixtures differ by more than
    ``MATCH_TARGET`` in match distance.

    Raises:
        ContinuationStalled / SeparationLost: the walk failed; retry with
            a different seed.
    """
    if m < 2:
        raise InvalidArgs(f"need m >= 2 for a moment-matched pair, got {m}")
    if m > max_m:
        raise InvalidArgs(f"m={m} exceeds the conditioning bound {max_m}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 0)))
    a0, p0 = _random_base(m, rng)
    order = 2 * m - 2
    targets = power_moments(a0, p0, order)
    theta0 = np.concatenate([a0, p0])
    P = _build_mixture(a0, p0)

    # walk the whole feasible segment of the curve in both directions,
    # keeping the feasible point with the widest next-order tensor gap
    # (the gap is not monotone along the curve)
    best_gap = 0.0
    best_theta: np.ndarray | None = None

    def stop(theta: np.ndarray) -> bool:
        nonlocal best_gap, best_theta
        q = _build_mixture(np.maximum(theta[:m], 1e-12), theta[m:])
        if mixture_match_distance(P, q) < MATCH_TARGET:
            return False
        gap = base_tensor_gap(P, q, order + 1)
        if gap > best_gap:
            best_gap = gap
            best_theta = theta.copy()
        return gap > 10.0 * BASE_TENSOR_GAP_MIN

    null = _kernel_basis(_constraint_jacobian(theta0, m, order))
    last_error: Exception = SeparationLost("walk never reached the match target")
    for sign in (1.0, -1.0):
        if best_gap > 10.0 * BASE_TENSOR_GAP_MIN:
            break
        try:
            _walk(theta0, m, targets, sign * null[:, 0], stop, FEAS_EPS)
        except (ContinuationStalled, SeparationLost) as exc:
            last_error = exc
    if best_theta is None or best_gap <= 1.2 * BASE_TENSOR_GAP_MIN:
        raise last_error if best_theta is None else SeparationLost(
            f"best reachable tensor gap {best_gap:.3e} is too small")
    Q = _build_mixture(best_theta[:m], best_theta[m:])
    _verify_base_pair(P, Q, order)
    return P, Q


def bernoulli_determinedness_match(m: int, seed: int = 0,
                                   max_m: int = MAX_BASE_M_DET) -> tuple[Mixture, Mixture]:
    """An m-component mixture P and an (m+1)-component mixture Q over two
    outcomes whose moments agree up to order 2m - 1.

    Q starts as P augmented with a zero-weight dummy component placed at
    the feasible point farthest from the existing probabilities; the
    continuation lifts the dummy weight along the two-dimensional kernel
    of the moment map until every weight comfortably clears the feasibility clamp.
    """
    if m < 1:
        raise InvalidArgs(f"need m >= 1, got {m}")
    if m > max_m:
        raise InvalidArgs(f"m={m} exceeds the conditioning bound {max_m}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 1)))
    a0, p0 = _random_base(m, rng)
    order = 2 * m - 1
    targets = power_moments(a0, p0, order)
    P = _build_mixture(a0, p0)

    c = m + 1
    dummy = _farthest_point(p0)
    theta0 = np.concatenate([a0, [0.0], p0, [dummy]])
    idx_dummy_weight = m  # position of the dummy weight inside theta

    null = _kernel_basis(_constraint_jacobian(theta0, c, order))
    direction = null @ null[idx_dummy_weight, :]
    if float(np.linalg.norm(direction)) < 1e-12:
        raise ContinuationStalled("kernel cannot lift the dummy weight")
    if direction[idx_dummy_weight] < 0.0:
        direction = -direction

    weight_target = 0.01
    best_gap = 0.0
    best_theta: np.ndarray | None = None

    def stop(theta: np.ndarray) -> bool:
        nonlocal best_gap, best_theta
        if float(theta[:c].min()) < weight_target:
            return False
        q = _build_mixture(theta[:c], theta[c:])
        gap = base_tensor_gap(P, q, order + 1)
        if gap > best_gap:
            best_gap = gap
            best_theta = theta.copy()
        return gap > 10.0 * BASE_TENSOR_GAP_MIN

    # weight floor -1e-9 lets the walk traverse the zero-weight start
    try:
        _walk(theta0, c, targets, direction, stop, -1e-9,
              steer=_steer_lift(idx_dummy_weight))
    except (ContinuationStalled, SeparationLost):
        if best_theta is None:
            raise
    if best_theta is None or best_gap <= 1.2 * BASE_TENSOR_GAP_MIN:
        raise SeparationLost(
            f"walk ended with best tensor gap {best_gap:.3e} before every "
            f"weight cleared {weight_target}")
    Q = _build_mixture(best_theta[:c], best_theta[c:])
    _verify_base_pair(P, Q, order)
    return P, Q


def _dummy_candidates(probs: np.ndarray) -> list[float]:
    """Candidate dummy placements in [PROB_LO, PROB_HI], best-separated first."""
    anchors = np.sort(np.concatenate([[PROB_LO], np.sort(probs), [PROB_HI]]))
    candidates = [PROB_LO, PROB_HI]
    candidates += [0.5 * (anchors[i] + anchors[i + 1]) for i in range(anchors.size - 1)]
    scored = sorted({float(c) for c in candidates},
                    key=lambda c: -min(abs(c - p) for p in probs))
    return [c for c in scored if min(abs(c - p) for p in probs) >= SEP_FLOOR]


def _verify_base_pair(P: Mixture, Q: Mixture, order: int) -> None:
    """Re-check the matched and first unmatched moments of an emitted pair."""
    gap_matched = float(np.abs(mixture_power_moments(P, order)
                               - mixture_power_moments(Q, order)).max())
    if gap_matched > NEWTON_TOL:
        raise VerificationFailed(
            f"moments up to order {order} differ by {gap_matched:.3e}")
    gap_next = base_tensor_gap(P, Q, order + 1)
    if gap_next <= BASE_TENSOR_GAP_MIN:
        raise VerificationFailed(
            f"order-{order + 1} tensors differ by only {gap_next:.3e}")
    probs_q = success_probabilities(Q)
    weights_q = np.asarray(Q.weights)
    if (weights_q.min() < FEAS_EPS or probs_q.min() < FEAS_EPS
            or probs_q.max() > 1.0 - FEAS_EPS):
        raise VerificationFailed("emitted mixture violates the feasibility clamp")


# ---------------------------------------------------------------------------
# Lifted counterexample pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CounterexamplePair:
    """Two distinct mixtures with equal group-size-n moment tensors.

    ``construction`` is "identifiability" (Q has at most as many
    components as P) or "determinedness" (Q has more). The verification
    fields are recomputed from scratch by the builders; the invariants are
    re-checked here so an invalid pair can never be constructed.
    """

    P: Mixture
    Q: Mixture
    n: int
    construction: str
    m_base: int
    k: int
    tensor_distance: float
    k_measured_P: int
    k_measured_Q: int
    match_distance: float

    def __post_init__(self):
        if self.construction not in ("identifiability", "determinedness"):
            raise InvalidArgs(f"unknown construction {self.construction!r}")
        if self.tensor_distance > 1e-8:
            raise VerificationFailed(
                f"tensor distance {self.tensor_distance:.3e} exceeds 1e-8")
        if not self.match_distance > 1e-3:
            raise VerificationFailed(
                f"mixtures do not genuinely differ: match {self.match_distance:.3e}")
        if self.construction == "identifiability" and self.Q.m > self.P.m:
            raise VerificationFailed("identifiability pair needs m(Q) <= m(P)")
        if self.construction == "determinedness" and self.Q.m <= self.P.m:
            raise VerificationFailed("determinedness pair needs m(Q) > m(P)")
        if self.k_measured_P < min(self.k, self.P.m):
            raise VerificationFailed(
                f"lifted P family has Kruskal rank {self.k_measured_P} < "
                f"min(k, m) = {min(self.k, self.P.m)}")
        if self.k_measured_Q < min(self.k, self.Q.m):
            raise VerificationFailed(
                f"lifted Q family has Kruskal rank {self.k_measured_Q} < "
                f"min(k, m) = {min(self.k, self.Q.m)}")


def _lifted_pair(base: tuple[Mixture, Mixture], m: int, k: int, n: int,
                 construction: str, rel_tol: float,
                 cap: int) -> CounterexamplePair:
    P, Q = base
    Pl = product_lift(P, k - 1, cap=cap)
    Ql = product_lift(Q, k - 1, cap=cap)
    dist = frobenius_distance(moment_tensor(Pl, n, cap=cap),
                              moment_tensor(Ql, n, cap=cap))
    kP = kruskal_rank(VectorFamily(Pl.component_matrix()), rel_tol).k
    kQ = kruskal_rank(VectorFamily(Ql.component_matrix()), rel_tol).k
    match = mixture_match_distance(Pl, Ql)
    # the base tensors at the first unmatched order must genuinely differ
    base_order = 2 * m - 1 if construction == "identifiability" else 2 * m
    if 2 ** base_order <= cap:
        base_gap = frobenius_distance(moment_tensor(P, base_order, cap=cap),
                                      moment_tensor(Q, base_order, cap=cap))
        if base_gap <= BASE_TENSOR_GAP_MIN:
            raise VerificationFailed(
                f"base tensors at order {base_order} differ by only {base_gap:.3e}")
    return CounterexamplePair(
        P=Pl, Q=Ql, n=n, construction=construction, m_base=m, k=k,
        tensor_distance=dist, k_measured_P=kP, k_measured_Q=kQ,
        match_distance=match,
    )


def _base_with_retries(builder, m: int, seed: int) -> tuple[Mixture, Mixture]:
    last: Exception | None = None
    for attempt in range(BASE_SEED_RETRIES):
        try:
            return builder(m, _child_seed(seed, attempt))
        except (ContinuationStalled, SeparationLost) as exc:
            last = exc
    raise last


def _child_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=(int(seed), index)).generate_state(1)[0])


def build_nonidentifiable(m: int, k: int, n: int, seed: int = 0,
                          rel_tol: float = DEFAULT_REL_TOL,
                          cap: int = DEFAULT_TENSOR_CAP) -> CounterexamplePair:
    """A k-independent mixture pair witnessing failure of n-identifiability.

    Requires m >= k >= 2 and 2m - 1 > (k - 1) n (outside that region no
    such pair exists and InvalidRegion is raised). The pair is the
    (k-1)-fold product lift of a base pair matched to moment order 2m - 2;
    its tensors at group size n coincide because (k - 1) n <= 2m - 2.
    """
    if not (m >= k >= 2):
        raise InvalidArgs(f"need m >= k >= 2, got m={m}, k={k}")
    if n < 1:
        raise InvalidArgs(f"need n >= 1, got {n}")
    if 2 * m - 1 <= (k - 1) * n:
        raise InvalidRegion(
            f"2m-1 = {2 * m - 1} <= (k-1)n = {(k - 1) * n}: identifiability is "
            "guaranteed here, no counterexample exists")
    if 2 ** ((k - 1) * n) > cap:
        raise CapExceeded(f"lifted tensor would need 2**{(k - 1) * n} entries")
    base = _base_with_retries(bernoulli_moment_match, m, seed)
    return _lifted_pair(base, m, k, n, "identifiability", rel_tol, cap)


def build_nondetermined(m: int, k: int, n: int, seed: int = 0,
                        rel_tol: float = DEFAULT_REL_TOL,
                        cap: int = DEFAULT_TENSOR_CAP) -> CounterexamplePair:
    """A k-independent mixture pair witnessing failure of n-determinedness.

    Requires m >= 1, k >= 2 and 2m > (k - 1) n. Q has m + 1 components;
    the base pair is matched to moment order 2m - 1 >= (k - 1) n.
    """
    if m < 1 or k < 2:
        raise InvalidArgs(f"need m >= 1 and k >= 2, got m={m}, k={k}")
    if m >= 2 and k > m:
        raise InvalidArgs(f"need k <= m for m >= 2, got m={m}, k={k}")
    if n < 1:
        raise InvalidArgs(f"need n >= 1, got {n}")
    if 2 * m <= (k - 1) * n:
        raise InvalidRegion(
            f"2m = {2 * m} <= (k-1)n = {(k - 1) * n}: outside the "
            "non-determinedness region")
    if 2 ** ((k - 1) * n) > cap:
        raise CapExceeded(f"lifted tensor would need 2**{(k - 1) * n} entries")
    base = _base_with_retries(bernoulli_determinedness_match, m, seed)
    return _lifted_pair(base, m, k, n, "determinedness", rel_tol, cap)
