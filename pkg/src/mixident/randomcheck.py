"""Random generation on the probability simplex and Monte Carlo checks of
almost-sure linear independence.

Draws from the uniform distribution on the simplex are realized by
normalizing unit-rate exponential variates (naive coordinate rescaling is
not uniform and is deliberately avoided).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Categorical, Mixture, make_mixture
from .errors import GenerationFailed, InvalidArgs
from .rank import DEFAULT_REL_TOL, VectorFamily, kruskal_rank, numerical_rank

MAX_REDRAWS = 100


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _simplex_point(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.exponential(1.0, size=d)
    return g / g.sum()


def sample_simplex(d: int, seed) -> Categorical:
    """One draw from the uniform distribution on the (d-1)-simplex."""
    if d < 1:
        raise InvalidArgs(f"d must be >= 1, got {d}")
    return Categorical(_simplex_point(d, _as_generator(seed)))


@dataclass(frozen=True)
class MonteCarloReport:
    """Tally of independence checks over repeated random simplex draws.

    ``per_trial_min_sv`` is only populated on request (CSV export)."""

    trials: int
    dimension: int
    independent_count: int
    min_observed_sv: float
    per_trial_min_sv: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.independent_count > self.trials:
            raise InvalidArgs("independent_count cannot exceed trials")


def monte_carlo_independence(d: int, trials: int, rel_tol: float = DEFAULT_REL_TOL,
                             seed=0, force_dependence: bool = False,
                             collect_per_trial: bool = False) -> MonteCarloReport:
    """Draw d uniform simplex points per trial and count full-rank outcomes.

    Random simplex points are linearly independent with probability one, so
    the expected count equals ``trials``; any miss at double precision is a
    tolerance red flag. With ``force_dependence``, one point per trial is
    replaced by the average of the others, a control that must be detected
    as rank-deficient in every trial.
    """
    if d < 2:
        raise InvalidArgs(f"d must be >= 2, got {d}")
    if trials < 1:
        raise InvalidArgs(f"trials must be >= 1, got {trials}")
    rng = _as_generator(seed)
    independent = 0
    min_sv = np.inf
    per_trial: list[float] = []
    for _ in range(trials):
        cols = np.column_stack([_simplex_point(d, rng) for _ in range(d)])
        if force_dependence:
            cols[:, -1] = cols[:, :-1].mean(axis=1)
        sv = np.linalg.svd(cols, compute_uv=False)
        min_sv = min(min_sv, float(sv[-1]))
        if collect_per_trial:
            per_trial.append(float(sv[-1]))
        if numerical_rank(VectorFamily(cols), rel_tol) == d:
            independent += 1
    return MonteCarloReport(trials=trials, dimension=d,
                            independent_count=independent,
                            min_observed_sv=float(min_sv),
                            per_trial_min_sv=tuple(per_trial) if collect_per_trial else None)


def random_k_independent_mixture(d: int, m: int, seed=0,
                                 rel_tol: float = DEFAULT_REL_TOL,
                                 min_tv_separation: float = 0.0,
                                 min_weight: float = 0.0) -> Mixture:
    """A random m-component mixture over d outcomes whose component family
    has Kruskal rank exactly min(d, m).

    Components and weights are uniform simplex draws; the generator
    re-draws (with a derived seed) until the rank module confirms the
    generic rank, making genericity an enforced postcondition. Optional
    floors reject draws with nearly coincident components or negligible
    weights; they do not change what the rank certificate asserts, but
    keep downstream recovery problems well conditioned.

    Raises:
        GenerationFailed: after ``MAX_REDRAWS`` unsuccessful draws, which
            indicates a tolerance misconfiguration rather than bad luck.
    """
    if d < 2 or m < 1:
        raise InvalidArgs(f"need d >= 2 and m >= 1, got d={d}, m={m}")
    target = min(d, m)
    for attempt in range(MAX_REDRAWS):
        rng = _as_generator(np.random.SeedSequence(entropy=(seed, attempt)))
        comps = [_simplex_point(d, rng) for _ in range(m)]
        weights = _simplex_point(m, rng) if m > 1 else np.ones(1)
        try:
            mix = make_mixture(weights, comps)
        except Exception:
            continue
        if mix.m != m:
            continue
        if min_weight > 0.0 and float(mix.weights.min()) < min_weight:
            continue
        if min_tv_separation > 0.0 and m > 1:
            cols = mix.component_matrix()
            tv = 0.5 * np.abs(cols[:, :, None] - cols[:, None, :]).sum(axis=0)
            if float(tv[np.triu_indices(m, k=1)].min()) < min_tv_separation:
                continue
        if kruskal_rank(VectorFamily(mix.component_matrix()), rel_tol).k == target:
            return mix
    raise GenerationFailed(
        f"no Kruskal-rank-{target} family in {MAX_REDRAWS} draws (d={d}, m={m})"
    )
