"""Rank-based significance tests for algorithm comparison.

Kruskal-Wallis omnibus test on midranks with tie correction, followed by
pairwise Dunn tests with Bonferroni-corrected two-sided p-values. The
chi-squared survival function is computed from the regularised incomplete
gamma function (series / continued fraction), the normal one from erfc,
so no numerical dependency is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

_GAMMA_EPS = 1e-15
_GAMMA_MAX_ITER = 500


def _gamma_q(a: float, x: float) -> float:
    """Regularised upper incomplete gamma Q(a, x), a > 0, x >= 0."""
    if x < 0 or a <= 0:
        raise ValueError("gamma_q requires a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        # series for P(a, x), then Q = 1 - P
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(_GAMMA_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _GAMMA_EPS:
                break
        p = total * math.exp(-x + a * math.log(x) - math.lgamma(a))
        return 1.0 - p
    # Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_sf(x: float, df: int) -> float:
    """Survival function of the chi-squared distribution."""
    if df < 1:
        raise ValueError("df must be at least 1")
    if x <= 0:
        return 1.0
    return _gamma_q(df / 2.0, x / 2.0)


def normal_sf(z: float) -> float:
    """Survival function of the standard normal distribution."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class SampleGroup:
    label: str
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("sample group must not be empty")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class PairwiseEntry:
    """Dunn comparison of one ordered group pair (i, j), i < j."""

    z: float
    adjusted_p: float
    verdict_row: str     # verdict of group i against group j: '+', '-' or '*'

    @property
    def verdict_col(self) -> str:
        return {"+": "-", "-": "+", "*": "*"}[self.verdict_row]


@dataclass(frozen=True)
class ComparisonResult:
    labels: tuple[str, ...]
    h_statistic: float
    omnibus_p: float
    significance: float
    pairwise: dict[tuple[int, int], PairwiseEntry]

    def verdict(self, i: int, j: int) -> str:
        """Verdict of group i from its own perspective against group j."""
        if i == j:
            raise ValueError("no self comparison")
        if i < j:
            return self.pairwise[(i, j)].verdict_row
        return self.pairwise[(j, i)].verdict_col


def _midranks(groups: Sequence[SampleGroup]) -> tuple[list[list[float]], float, int]:
    """Per-group midranks over the pooled sample, tie term, pooled size."""
    pooled: list[tuple[float, int, int]] = []
    for gi, g in enumerate(groups):
        for vi, v in enumerate(g.values):
            pooled.append((v, gi, vi))
    pooled.sort(key=lambda t: t[0])
    n_total = len(pooled)
    ranks = [[0.0] * len(g.values) for g in groups]
    tie_term = 0.0
    i = 0
    while i < n_total:
        j = i
        while j < n_total and pooled[j][0] == pooled[i][0]:
            j += 1
        run = j - i
        mid = (i + 1 + j) / 2.0
        for _, gi, vi in pooled[i:j]:
            ranks[gi][vi] = mid
        if run > 1:
            tie_term += run ** 3 - run
        i = j
    return ranks, tie_term, n_total


def kruskal_wallis(groups: Sequence[SampleGroup]) -> tuple[float, float]:
    """H statistic (tie-corrected) and its chi-squared p-value."""
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    ranks, tie_term, n = _midranks(groups)
    h = 12.0 / (n * (n + 1)) * sum(sum(r) ** 2 / len(r) for r in ranks) - 3.0 * (n + 1)
    correction = 1.0 - tie_term / (n ** 3 - n)
    if correction <= 0:
        return 0.0, 1.0  # every observation identical
    h /= correction
    h = max(h, 0.0)  # guard tiny negative rounding
    return h, chi2_sf(h, len(groups) - 1)


def dunn_bonferroni(groups: Sequence[SampleGroup], significance: float = 0.05) -> ComparisonResult:
    """Pairwise post-hoc comparison with Bonferroni-corrected p-values.

    The verdict of a group against another is '+' when its mean rank is
    significantly higher, '-' when significantly lower and '*' otherwise.
    When the omnibus test does not reject, every verdict is '*'.
    """
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if not (0 < significance < 1):
        raise ValueError("significance must lie in (0, 1)")
    h, omnibus_p = kruskal_wallis(groups)
    ranks, tie_term, n = _midranks(groups)
    mean_ranks = [sum(r) / len(r) for r in ranks]
    g = len(groups)
    n_pairs = g * (g - 1) // 2
    variance_base = n * (n + 1) / 12.0 - tie_term / (12.0 * (n - 1)) if n > 1 else 0.0
    gate_open = omnibus_p < significance

    pairwise: dict[tuple[int, int], PairwiseEntry] = {}
    for i in range(g):
        for j in range(i + 1, g):
            se_sq = variance_base * (1.0 / len(ranks[i]) + 1.0 / len(ranks[j]))
            diff = mean_ranks[i] - mean_ranks[j]
            z = diff / math.sqrt(se_sq) if se_sq > 0 else 0.0
            raw_p = 2.0 * normal_sf(abs(z))
            adj_p = min(1.0, raw_p * n_pairs)
            if gate_open and adj_p < significance and diff > 0:
                verdict = "+"
            elif gate_open and adj_p < significance and diff < 0:
                verdict = "-"
            else:
                verdict = "*"
            pairwise[(i, j)] = PairwiseEntry(z=z, adjusted_p=adj_p, verdict_row=verdict)

    return ComparisonResult(
        labels=tuple(g_.label for g_ in groups),
        h_statistic=h,
        omnibus_p=omnibus_p,
        significance=significance,
        pairwise=pairwise,
    )


def verdict_string(result: ComparisonResult, own_index: int, numbering: Sequence[int] | None = None) -> str:
    """Stat-column text for one group, e.g. ``"2(-) 3(-)"``.

    numbering maps group positions to displayed numbers (1-based group
    position by default).
    """
    g = len(result.labels)
    nums = list(numbering) if numbering is not None else [i + 1 for i in range(g)]
    parts = []
    for other in range(g):
        if other == own_index:
            continue
        parts.append(f"{nums[other]}({result.verdict(own_index, other)})")
    return " ".join(parts)
