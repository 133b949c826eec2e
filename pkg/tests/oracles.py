"""Independent test oracles.

Everything here is deliberately implemented from scratch with different
machinery than the package under test: exact rational arithmetic for
ranks, brute-force permutation search for mixture matching, and explicit
closed forms for small moment systems. These stay in the test tree only.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def exact_rank(rows: list[list[Fraction]]) -> int:
    """Rank over the rationals by Gaussian elimination with exact pivots."""
    mat = [list(map(Fraction, row)) for row in rows]
    n_rows = len(mat)
    n_cols = len(mat[0]) if n_rows else 0
    rank = 0
    pivot_row = 0
    for col in range(n_cols):
        pivot = None
        for r in range(pivot_row, n_rows):
            if mat[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        mat[pivot_row], mat[pivot] = mat[pivot], mat[pivot_row]
        inv = mat[pivot_row][col]
        for r in range(pivot_row + 1, n_rows):
            if mat[r][col] != 0:
                factor = mat[r][col] / inv
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[pivot_row])]
        pivot_row += 1
        rank += 1
        if pivot_row == n_rows:
            break
    return rank


def exact_kruskal_rank(columns: list[list[int]]) -> int:
    """Kruskal rank of integer columns by exhaustive exact subset ranks."""
    m = len(columns)
    dim = len(columns[0])
    kmax = min(dim, m)
    for size in range(1, kmax + 1):
        for subset in itertools.combinations(range(m), size):
            rows = [[Fraction(columns[j][i]) for j in subset] for i in range(dim)]
            if exact_rank(rows) < size:
                return size - 1
    if m > dim:
        return dim
    return kmax


def bernoulli_match_two(t1: float, t2: float, q1: float) -> tuple[float, float]:
    """Closed-form two-component Bernoulli mixture matching mean t1 and
    second moment t2 with the first success probability pinned at q1.

    Solving a*q1 + (1-a)*q2 = t1 and a*q1^2 + (1-a)*q2^2 = t2 for (a, q2)
    eliminates q2 and leaves the linear equation
    (t2 - t1^2) = a*(q1^2 - 2*q1*t1 + t2).
    """
    denom = q1 * q1 - 2.0 * q1 * t1 + t2
    a = (t2 - t1 * t1) / denom
    q2 = (t1 - a * q1) / (1.0 - a)
    return a, q2


def brute_force_match_distance(weights_p, comps_p, weights_q, comps_q) -> float:
    """Minimum over all bijections of the max weight/TV discrepancy."""
    m = len(weights_p)
    best = float("inf")
    for perm in itertools.permutations(range(m)):
        worst = 0.0
        for i, j in enumerate(perm):
            dw = abs(weights_p[i] - weights_q[j])
            tv = 0.5 * sum(abs(a - b) for a, b in zip(comps_p[i], comps_q[j]))
            worst = max(worst, dw, tv)
        best = min(best, worst)
    return best
