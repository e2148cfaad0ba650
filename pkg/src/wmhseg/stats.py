"""Paired statistics: Wilcoxon signed-rank test and Benjamini-Hochberg FDR."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata

from .errors import ContractError

EXACT_LIMIT = 25  # exact signed-rank distribution up to this many nonzero pairs
MIN_NONZERO = 6


def _exact_two_sided_p(ranks: np.ndarray, w_plus: float) -> float:
    """Exact two-sided p by enumerating all sign assignments.

    Ranks may be midranks (half-integers from ties), so everything is
    doubled to stay integral; the distribution of 2*W+ is built by repeated
    polynomial convolution over the 2^n equally likely sign patterns.
    """
    doubled = np.rint(2 * ranks).astype(np.int64)
    total = int(doubled.sum())
    dist = np.zeros(total + 1, dtype=np.float64)
    dist[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[: total + 1 - r]
        dist = dist + shifted
    dist /= dist.sum()

    w2 = int(round(2 * w_plus))
    lower = dist[: w2 + 1].sum()
    upper = dist[w2:].sum()
    return float(min(1.0, 2.0 * min(lower, upper)))


def wilcoxon_signed_rank(differences) -> float:
    """Two-sided p-value for paired differences; zeros are dropped.

    Exact distribution for up to 25 nonzero pairs, normal approximation with
    tie correction beyond that.  All-zero input is undefined (returns NaN);
    fewer than 6 nonzero pairs is a contract error.
    """
    d = np.asarray(differences, dtype=np.float64)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return float("nan")
    if n < MIN_NONZERO:
        raise ContractError(f"need at least {MIN_NONZERO} nonzero pairs, got {n}")

    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n <= EXACT_LIMIT:
        return _exact_two_sided_p(ranks, w_plus)

    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts)).sum()) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if var <= 0:
        return float("nan")
    z = (w_plus - mean) / math.sqrt(var)
    return float(min(1.0, math.erfc(abs(z) / math.sqrt(2.0))))


def benjamini_hochberg(p_values) -> np.ndarray:
    """Step-up FDR adjustment, returned in the original order."""
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        return p.copy()
    if np.any((p < 0) | (p > 1)):
        raise ContractError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    adjusted_sorted = p[order] * m / np.arange(1, m + 1)
    # Running minimum from the largest p downwards makes it monotone.
    adjusted_sorted = np.minimum.accumulate(adjusted_sorted[::-1])[::-1]
    adjusted_sorted = np.minimum(adjusted_sorted, 1.0)
    out = np.empty(m)
    out[order] = adjusted_sorted
    return out
