"""Wilcoxon rank-sum testing and the pairwise performance score.

The rank-sum test is computed from the Mann-Whitney U statistic with
midranks for ties.  Exact mode enumerates the full permutation distribution
(feasible up to 20 pooled observations); normal mode applies the
tie-corrected normal approximation with continuity correction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .util import DataError, midranks

ALTERNATIVES = ("less", "greater", "two_sided")
EXACT_LIMIT = 20


def _u_statistic(ranks: np.ndarray, n1: int) -> float:
    # U for the first sample: large U means the first sample tends larger
    r1 = float(ranks[:n1].sum())
    return r1 - n1 * (n1 + 1) / 2.0


def _norm_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _exact_pvalues(ranks: np.ndarray, n1: int, u_obs: float) -> tuple[float, float]:
    n = len(ranks)
    idx = range(n)
    offset = n1 * (n1 + 1) / 2.0
    total = 0
    count_le = 0
    count_ge = 0
    tol = 1e-9
    for chosen in combinations(idx, n1):
        u = float(ranks[list(chosen)].sum()) - offset
        total += 1
        if u <= u_obs + tol:
            count_le += 1
        if u >= u_obs - tol:
            count_ge += 1
    return count_le / total, count_ge / total


def _normal_pvalues(ranks: np.ndarray, n1: int, u_obs: float) -> tuple[float, float]:
    n = len(ranks)
    n2 = n - n1
    mu = n1 * n2 / 2.0
    # tie correction over the pooled sample
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0, 1.0
    sd = math.sqrt(var)
    p_less = 1.0 - _norm_sf((u_obs - mu + 0.5) / sd)
    p_greater = _norm_sf((u_obs - mu - 0.5) / sd)
    return min(p_less, 1.0), min(p_greater, 1.0)


def rank_sum_test(a, b, alternative: str = "two_sided", mode: str = "auto") -> float:
    """P-value of the Wilcoxon rank-sum (Mann-Whitney U) test.

    alternative "less" tests whether `a` tends to take smaller values than
    `b`.  mode "exact" enumerates all assignments (needs |a|+|b| <= 20);
    "auto" picks exact when feasible.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or len(a) == 0 or len(b) == 0:
        raise DataError("both samples must be non-empty 1-D sequences")
    if alternative not in ALTERNATIVES:
        raise DataError(f"unknown alternative {alternative!r}")
    if mode == "auto":
        mode = "exact" if len(a) + len(b) <= EXACT_LIMIT else "normal"
    if mode not in ("exact", "normal"):
        raise DataError(f"unknown mode {mode!r}")
    if mode == "exact" and len(a) + len(b) > EXACT_LIMIT:
        raise DataError(f"exact mode supports at most {EXACT_LIMIT} pooled observations")

    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    u_obs = _u_statistic(ranks, len(a))
    if mode == "exact":
        p_less, p_greater = _exact_pvalues(ranks, len(a), u_obs)
    else:
        p_less, p_greater = _normal_pvalues(ranks, len(a), u_obs)
    if alternative == "less":
        return p_less
    if alternative == "greater":
        return p_greater
    return min(1.0, 2.0 * min(p_less, p_greater))


@dataclass(frozen=True)
class ComparisonMatrix:
    """Pairwise significance outcomes delta[i, j] and the per-system score P."""

    systems: tuple[str, ...]
    delta: np.ndarray  # delta[i, j] = 1 iff system j significantly beats system i
    scores: tuple[int, ...]


def performance_score(samples, alpha: float = 0.05, system_ids=None,
                      alternative: str = "less", mode: str = "auto") -> ComparisonMatrix:
    """Count, per system, how many rivals are significantly better.

    `samples[i]` holds system i's mean-relSP1 values over the independent
    runs (lower is better).  delta[i, j] = 1 iff the one-sided rank-sum test
    finds sample j below sample i at level alpha.
    """
    samples = [np.asarray(s, dtype=float) for s in samples]
    if len(samples) < 2:
        raise DataError("need at least 2 systems to compare")
    lengths = {len(s) for s in samples}
    if len(lengths) > 1:
        raise DataError(f"mismatched run counts: {sorted(lengths)}")
    if system_ids is None:
        system_ids = tuple(f"S{i + 1}" for i in range(len(samples)))
    system_ids = tuple(system_ids)
    if len(system_ids) != len(samples):
        raise DataError("system_ids length must match the number of samples")

    l = len(samples)
    delta = np.zeros((l, l), dtype=int)
    for i in range(l):
        for j in range(l):
            if i == j:
                continue
            if rank_sum_test(samples[j], samples[i], alternative, mode) < alpha:
                delta[i, j] = 1
    scores = tuple(int(s) for s in delta.sum(axis=1))
    return ComparisonMatrix(systems=system_ids, delta=delta, scores=scores)
