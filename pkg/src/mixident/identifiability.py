"""Bound calculators for the four grouped-sample identifiability theorems,
Kruskal-condition checks, constructive certification by recovery from the
exact moment tensor, and an optimization-based falsifier.

The guarantees implemented here, for a mixture of m components whose
component family is k-independent and a group size n:

* identifiable when m >= 2, k >= 2 and 2m - 1 <= (k - 1) n;
* determined when additionally n is even and 2m - 2 <= (k - 1)(n - 1);
* a k-independent non-identifiable instance exists when m >= k >= 2 and
  2m - 1 > (k - 1) n, and a non-determined one when 2m > (k - 1) n.

Recovery works by flattening the moment tensor three ways, compressing the
two largest modes, and simultaneously diagonalizing two random contraction
slices; a multi-start least-squares fallback covers splits where fewer
than two modes can reach full column rank m (that gap is surfaced in the
certification report, never hidden).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from . import _optim
from .core import (
    DEFAULT_TENSOR_CAP,
    Categorical,
    Mixture,
    _kron_power,
    make_mixture,
    mixture_match_distance,
)
from .errors import (
    InvalidArgs,
    NoConvergence,
    NTooSmall,
    RankDeficientModes,
)
from .rank import DEFAULT_REL_TOL, VectorFamily, kruskal_rank
from .tensor import MomentTensor, Split3, flatten3, frobenius_distance, moment_tensor

PENCIL_COND_CAP = 1e10  # regenerate contraction slices beyond this condition number
MATCH_TOL = 1e-6  # certification threshold on mixture_match_distance
WITNESS_RESIDUAL_TOL = 1e-10  # emission threshold for search_alternative
WITNESS_DISTINCT_TOL = 1e-3  # emitted witnesses must differ from P by more


def _derive_seed(seed: int, index: int) -> int:
    """Deterministic 32-bit child seed for trial/restart ``index``."""
    return int(np.random.SeedSequence(entropy=(int(seed), int(index))).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Bound calculators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundVerdict:
    """What the four theorems say about an (m, k, n) cell.

    ``identifiable_guaranteed``/``determined_guaranteed`` report the upper
    bounds; ``counterexample_exists_*`` report the matching lower bounds
    (constructible k-independent instances violating the property). Cells
    covered by neither are flagged in ``notes``.
    """

    m: int
    k: int
    n: int
    identifiable_guaranteed: bool
    determined_guaranteed: bool
    counterexample_exists_ident: bool
    counterexample_exists_det: bool
    notes: tuple[str, ...]


def bound_verdict(m: int, k: int, n: int) -> BoundVerdict:
    """Evaluate all four theorem bounds at integers (m, k, n), 1 <= k <= m."""
    if m < 1 or k < 1 or n < 1:
        raise InvalidArgs(f"m, k, n must be >= 1, got ({m}, {k}, {n})")
    if k > m:
        raise InvalidArgs(f"k={k} exceeds m={m}; a family of m vectors cannot be "
                          "k-independent for k > m")
    notes: list[str] = []
    identifiable = (m >= 2 and k >= 2 and 2 * m - 1 <= (k - 1) * n)
    if m == 1:
        identifiable = True
        notes.append("m=1: a single-component mixture is trivially identifiable at "
                     "every group size")
    determined = (m >= 2 and n % 2 == 0 and 2 * m - 2 <= (k - 1) * (n - 1))
    cex_ident = (m >= k >= 2) and (2 * m - 1 > (k - 1) * n)
    cex_det = (m >= k >= 2) and (2 * m > (k - 1) * n)
    if k == 2 and m >= 2:
        notes.append("k=2 reduction: identifiable iff n >= 2m-1; determined (even n) "
                     "iff n >= 2m")
    if k == m and m >= 2:
        notes.append("k=m (linearly independent components): identifiable iff n >= 3; "
                     "determined iff n is even and n >= 4")
    if n == 2 and m >= 2:
        notes.append("determinedness criterion is vacuous at n=2: no m >= 2 satisfies it")
    if m >= 2 and k == 1:
        notes.append("k=1 cannot arise for distinct probability vectors (any two are "
                     "2-independent); no guarantee computed")
    if m >= 2 and not determined and not cex_det:
        notes.append("determinedness unknown in this cell (odd group size, or the strip "
                     "between the guarantee and the counterexample region); no claim made")
    return BoundVerdict(
        m=m, k=k, n=n,
        identifiable_guaranteed=identifiable,
        determined_guaranteed=determined,
        counterexample_exists_ident=cex_ident,
        counterexample_exists_det=cex_det,
        notes=tuple(notes),
    )


def balanced_split(n: int) -> Split3:
    """The balanced three-way split of n >= 3 used by the recovery argument."""
    if n < 3:
        raise NTooSmall(f"a three-way split needs n >= 3, got {n}")
    q, r = divmod(n, 3)
    if r == 0:
        return Split3(q, q, q)
    if r == 1:
        return Split3(q, q, q + 1)
    return Split3(q, q + 1, q + 1)


@dataclass(frozen=True)
class KruskalCondition:
    """Mode-wise Kruskal ranks of split component powers and whether their
    sum certifies uniqueness of the rank-r decomposition (k1+k2+k3 >= 2r+2)."""

    r: int
    k1: int
    k2: int
    k3: int
    satisfied: bool


def kruskal_condition(P: Mixture, n: int, s: Split3,
                      rel_tol: float = DEFAULT_REL_TOL,
                      cap: int = DEFAULT_TENSOR_CAP) -> KruskalCondition:
    """Measure the three mode Kruskal ranks of the split power families."""
    if s.total != n:
        raise InvalidArgs(f"split {s} does not sum to n={n}")
    base = VectorFamily(P.component_matrix())
    ks = [kruskal_rank(base.power_family(ni, cap=cap), rel_tol).k
          for ni in (s.n1, s.n2, s.n3)]
    return KruskalCondition(r=P.m, k1=ks[0], k2=ks[1], k3=ks[2],
                            satisfied=ks[0] + ks[1] + ks[2] >= 2 * P.m + 2)


# ---------------------------------------------------------------------------
# Constructive recovery
# ---------------------------------------------------------------------------

def _depower(vec: np.ndarray, d: int, r: int) -> np.ndarray:
    """Extract the unit-mass base vector from a scaled r-fold Kronecker power."""
    if r == 1:
        w = vec.copy()
    else:
        u, _, _ = np.linalg.svd(vec.reshape(d, d ** (r - 1)), full_matrices=False)
        w = u[:, 0]
    if w.sum() < 0.0:
        w = -w
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        raise NoConvergence("de-powered factor has no positive mass")
    return w / total


def _mode_rank_ok(unfolding: np.ndarray, m: int, rel_tol: float) -> bool:
    sv = np.linalg.svd(unfolding, compute_uv=False)
    return sv.shape[0] >= m and sv[m - 1] > rel_tol * sv[0]


def diagonalization_feasible(d: int, m: int, s: Split3) -> bool:
    """Whether two of the three split modes are large enough to carry rank m."""
    dims = sorted([d ** s.n1, d ** s.n2, d ** s.n3], reverse=True)
    return dims[1] >= m


def _diagonalization_components(W: np.ndarray, ns: tuple[int, int, int], d: int,
                                m: int, rel_tol: float,
                                rng: np.random.Generator) -> np.ndarray:
    """Component estimates from simultaneous diagonalization of two random
    contraction slices of the flattened tensor W.

    The two largest modes are compressed to rank m and carry the
    eigen-decomposition; the smallest mode is contracted. Raises
    RankDeficientModes when the two largest modes cannot both reach rank m.
    """
    dims = np.array(W.shape)
    order = tuple(np.argsort(-dims, kind="stable"))
    Wt = np.transpose(W, order)
    nA = ns[order[0]]
    DA, DB, DC = Wt.shape
    if DB < m:
        raise RankDeficientModes(
            f"second-largest mode has size {DB} < m={m}; no pair of modes can "
            "carry full column rank"
        )
    MA = Wt.reshape(DA, DB * DC)
    UA, sA, _ = np.linalg.svd(MA, full_matrices=False)
    if not (sA.shape[0] >= m and sA[m - 1] > rel_tol * sA[0]):
        raise RankDeficientModes("largest-mode unfolding is rank deficient below m")
    MB = np.transpose(Wt, (1, 0, 2)).reshape(DB, DA * DC)
    UB, sB, _ = np.linalg.svd(MB, full_matrices=False)
    if not (sB.shape[0] >= m and sB[m - 1] > rel_tol * sB[0]):
        raise RankDeficientModes("second-mode unfolding is rank deficient below m")
    UA = UA[:, :m]
    UB = UB[:, :m]
    G = np.einsum("abc,am,bn->mnc", Wt, UA, UB)
    last_err: Exception | None = None
    for _ in range(8):
        u = rng.uniform(-1.0, 1.0, DC)
        v = rng.uniform(-1.0, 1.0, DC)
        S1 = G @ u
        S2 = G @ v
        if np.linalg.cond(S2) > PENCIL_COND_CAP:
            last_err = NoConvergence("near-singular contraction pencil")
            continue
        evals, evecs = np.linalg.eig(S1 @ np.linalg.inv(S2))
        scale = float(np.abs(evals).max())
        if scale > 0 and float(np.abs(evals.imag).max()) > 1e-6 * scale:
            last_err = NoConvergence("complex eigenvalues in contraction pencil")
            continue
        factors = UA @ evecs.real
        try:
            comps = np.array([_depower(factors[:, i], d, nA) for i in range(m)])
        except NoConvergence as exc:
            last_err = exc
            continue
        return comps
    raise last_err if last_err is not None else NoConvergence("no usable contraction")


def _weights_by_nnls(T: np.ndarray, comps: np.ndarray, n: int) -> np.ndarray:
    design = np.column_stack([_kron_power(row, n) for row in comps])
    w, _ = nnls(design, T.ravel())
    total = w.sum()
    if total <= 0.0:
        raise NoConvergence("nonnegative least squares assigned zero total weight")
    return w / total


def _assemble_mixture(weights: np.ndarray, comps: np.ndarray) -> Mixture:
    keep = weights > 1e-12
    return make_mixture(weights[keep] / weights[keep].sum(),
                        [Categorical(row) for row in comps[keep]])


def recover_mixture(T: MomentTensor, m: int, s: Split3 | None,
                    rel_tol: float = DEFAULT_REL_TOL, *, seed: int = 0,
                    method: str = "auto", residual_tol: float = 1e-8,
                    contraction_retries: int = 8,
                    fallback_restarts: int = 200) -> Mixture:
    """Recover an m-component mixture from its (near-)exact moment tensor.

    Stage 1 estimates components by simultaneous diagonalization of two
    random contraction slices of the split tensor, de-powers the Kronecker
    factors to base components, and fits weights by nonnegative least
    squares. Stage 2 polishes all parameters by projected Gauss-Newton
    until the Frobenius residual is driven toward 1e-10; the result is
    accepted only if the residual is at most ``residual_tol``.

    For m == 1 the component is read off by exact marginalization and the
    split is ignored (pass None). ``method`` selects the stage-1 engine:
    "diagonalization" (raise RankDeficientModes when fewer than two modes
    can reach rank m), "leastsq" (multi-start constrained least squares),
    or "auto" (diagonalization with least-squares fallback).

    Raises:
        RankDeficientModes: strict diagonalization on a deficient split.
        NoConvergence: no candidate reached ``residual_tol``.
    """
    if method not in ("auto", "diagonalization", "leastsq"):
        raise InvalidArgs(f"unknown method {method!r}")
    if m < 1:
        raise InvalidArgs(f"m must be >= 1, got {m}")
    n = T.order
    d = T.dim

    if m == 1:
        probs = T.entries.reshape(d, -1).sum(axis=1)
        mix = make_mixture(np.ones(1), [Categorical(probs / probs.sum())])
        if frobenius_distance(moment_tensor(mix, n), T) > residual_tol:
            raise NoConvergence("rank-1 marginalization left a large residual")
        return mix

    if s is None:
        raise InvalidArgs("a split is required for m >= 2")
    if s.total != n:
        raise InvalidArgs(f"split {s} does not sum to tensor order {n}")

    target = T.entries
    ns = (s.n1, s.n2, s.n3)
    W = flatten3(T, s)

    def _finish(weights: np.ndarray, comps: np.ndarray) -> Mixture | None:
        weights, comps, resid = _optim.gauss_newton_polish(target, weights, comps)
        if resid > residual_tol:
            return None
        mix = _assemble_mixture(weights, comps)
        if mix.m != m:
            return None
        if frobenius_distance(moment_tensor(mix, n), T) > residual_tol:
            return None
        return mix

    tried_diag = method in ("auto", "diagonalization")
    if tried_diag:
        try:
            for attempt in range(contraction_retries):
                rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=(int(seed), attempt)))
                try:
                    comps = _diagonalization_components(W, ns, d, m, rel_tol, rng)
                    weights = _weights_by_nnls(target, comps, n)
                except NoConvergence:
                    continue
                mix = _finish(weights, comps)
                if mix is not None:
                    return mix
            if method == "diagonalization":
                raise NoConvergence(
                    f"diagonalization failed to reach residual {residual_tol} in "
                    f"{contraction_retries} contraction draws")
        except RankDeficientModes:
            if method == "diagonalization":
                raise

    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 10_000)))
    weights, comps, resid = _optim.fit_mixture_tensor(
        target, m, rng, restarts=fallback_restarts, accept_resid=residual_tol * 1e-2)
    if weights is not None and resid <= residual_tol:
        mix = _finish(weights, comps)
        if mix is not None:
            return mix
    raise NoConvergence(f"no recovery reached residual {residual_tol}")


# ---------------------------------------------------------------------------
# Certification and falsification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecoveryTrial:
    """One seeded recovery attempt against the exact moment tensor."""

    seed: int
    match_distance: float
    residual: float
    succeeded: bool


@dataclass(frozen=True)
class CertificationReport:
    """Joint theoretical and constructive evidence for identifiability.

    ``certified`` requires the Kruskal condition at the balanced split
    (theoretical certificate) plus every recovery trial matching the truth
    below ``MATCH_TOL`` (constructive evidence). ``notes`` surface trivial
    cases and any fallback from simultaneous diagonalization.
    """

    bound: BoundVerdict
    kruskal: KruskalCondition | None
    trials: tuple[RecoveryTrial, ...]
    certified: bool
    k_measured: int
    notes: tuple[str, ...]


def certify_identifiability(P: Mixture, n: int, trials: int = 5, seed: int = 0,
                            rel_tol: float = DEFAULT_REL_TOL,
                            cap: int = DEFAULT_TENSOR_CAP) -> CertificationReport:
    """Certify that P is recoverable from its group-size-n moment tensor."""
    if trials < 1:
        raise InvalidArgs(f"trials must be >= 1, got {trials}")
    k_measured = kruskal_rank(VectorFamily(P.component_matrix()), rel_tol).k
    bound = bound_verdict(P.m, k_measured, n)
    notes: list[str] = []

    if P.m == 1:
        T = moment_tensor(P, n, cap=cap)
        outcomes = []
        for t in range(trials):
            child = _derive_seed(seed, t)
            rec = recover_mixture(T, 1, None, rel_tol, seed=child)
            md = mixture_match_distance(P, rec)
            outcomes.append(RecoveryTrial(child, md, frobenius_distance(
                moment_tensor(rec, n, cap=cap), T), md <= MATCH_TOL))
        notes.append("m=1: uniqueness is trivial; Kruskal condition not applicable")
        return CertificationReport(bound, None, tuple(outcomes),
                                   all(o.succeeded for o in outcomes), k_measured,
                                   tuple(notes))

    if n < 3:
        notes.append("group size below 3 admits no three-way split; constructive "
                     "certification unavailable")
        return CertificationReport(bound, None, (), False, k_measured, tuple(notes))

    s = balanced_split(n)
    kc = kruskal_condition(P, n, s, rel_tol, cap=cap)
    if not diagonalization_feasible(P.d, P.m, s):
        notes.append("simultaneous diagonalization infeasible at this split (fewer "
                     "than two modes can reach rank m); recovery trials use the "
                     "least-squares fallback, which is evidence, not proof")
    T = moment_tensor(P, n, cap=cap)
    outcomes = []
    for t in range(trials):
        child = _derive_seed(seed, t)
        try:
            rec = recover_mixture(T, P.m, s, rel_tol, seed=child, method="auto")
            md = mixture_match_distance(P, rec)
            resid = frobenius_distance(moment_tensor(rec, n, cap=cap), T)
            outcomes.append(RecoveryTrial(child, md, resid, md <= MATCH_TOL))
        except (NoConvergence, RankDeficientModes):
            outcomes.append(RecoveryTrial(child, math.inf, math.inf, False))
    certified = kc.satisfied and all(o.succeeded for o in outcomes)
    return CertificationReport(bound, kc, tuple(outcomes), certified, k_measured,
                               tuple(notes))


def search_alternative(P: Mixture, n: int, l: int, restarts: int = 50,
                       seed: int = 0, *, max_iter: int = 500,
                       cap: int = DEFAULT_TENSOR_CAP) -> Mixture | None:
    """Hunt for a different mixture with at most l components and the same
    group-size-n moment tensor.

    Multi-start projected gradient (with a Gauss-Newton polish once a
    restart looks promising) minimizes the squared Frobenius residual.
    A candidate is emitted only if, after dropping negligible weights and
    merging near-duplicate components, its independently recomputed
    residual stays below ``WITNESS_RESIDUAL_TOL`` and it differs from P by
    more than ``WITNESS_DISTINCT_TOL``. Returning None means no witness
    was found; it is NOT a proof of determinedness.
    """
    if l < 1:
        raise InvalidArgs(f"l must be >= 1, got {l}")
    if restarts < 1:
        raise InvalidArgs(f"restarts must be >= 1, got {restarts}")
    T = moment_tensor(P, n, cap=cap)
    target = T.entries
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), r)))
        w0, c0 = _optim.random_start(l, P.d, rng)
        w, c, resid = _optim.projected_gradient(target, w0, c0, max_iter=max_iter)
        if resid > 1e-2:
            continue
        w, c, resid = _optim.gauss_newton_polish(target, w, c)
        if resid > WITNESS_RESIDUAL_TOL:
            continue
        candidate = _clean_candidate(w, c)
        if candidate is None:
            continue
        if frobenius_distance(moment_tensor(candidate, n, cap=cap), T) > WITNESS_RESIDUAL_TOL:
            continue
        if mixture_match_distance(P, candidate) > WITNESS_DISTINCT_TOL:
            return candidate
    return None


def _clean_candidate(weights: np.ndarray, comps: np.ndarray,
                     weight_floor: float = 1e-11,
                     merge_tol: float = 1e-4) -> Mixture | None:
    """Normalize an optimizer output into a minimal mixture.

    Components closer than ``merge_tol`` (max-norm) are merged into their
    weighted mean and negligible weights dropped, so that near-duplicate
    representations of the truth collapse back onto it instead of posing
    as witnesses.
    """
    keep = weights > weight_floor
    if not np.any(keep):
        return None
    w = weights[keep]
    c = comps[keep]
    merged_w: list[float] = []
    merged_c: list[np.ndarray] = []
    for wi, row in zip(w, c):
        for j, kept in enumerate(merged_c):
            if float(np.abs(kept - row).max()) <= merge_tol:
                total = merged_w[j] + wi
                merged_c[j] = (merged_w[j] * kept + wi * row) / total
                merged_w[j] = total
                break
        else:
            merged_w.append(float(wi))
            merged_c.append(row.copy())
    warr = np.asarray(merged_w)
    warr = warr / warr.sum()
    try:
        return make_mixture(warr, [Categorical(row / row.sum()) for row in merged_c])
    except Exception:
        return None
