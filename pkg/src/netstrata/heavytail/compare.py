"""Pairwise log-likelihood ratios with normalised-ratio significance, and
the selection score summing significant ratios per candidate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .distributions import KIND_ORDER, CandidateKind
from .fitting import as_values

SCORE_SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class LrOutcome:
    r_statistic: float
    p_value: float
    n: int


def pointwise_log_ratio(fit1, fit2, sample):
    """Per-point ``ln p1(x) - ln p2(x)`` on the values both fits support.

    Both densities are conditioned on ``x >= max(x_min1, x_min2)`` so they
    integrate to one over the same support.
    """
    values = as_values(sample)
    x_common = max(fit1.x_min, fit2.x_min)
    x = values[values >= x_common]
    if x.size == 0:
        raise ValueError("no values above the common x_min")
    lp1 = fit1.logpdf(x) - (fit1.logsf(x_common) if x_common > fit1.x_min else 0.0)
    lp2 = fit2.logpdf(x) - (fit2.logsf(x_common) if x_common > fit2.x_min else 0.0)
    return np.asarray(lp1 - lp2, dtype=float)


def likelihood_ratio(fit1, fit2, sample):
    """Log-likelihood ratio R(fit1, fit2); positive favours ``fit1``.

    p-value: ``erfc(|R| / sqrt(2 n var))`` with ``var`` the (1/n) variance of
    the per-point differences; identical densities give ``p = 1``.
    """
    d = pointwise_log_ratio(fit1, fit2, sample)
    n = d.size
    r = float(d.sum())
    var = float(np.mean((d - d.mean()) ** 2))
    if var <= 0.0 or not math.isfinite(var):
        return LrOutcome(r, 1.0, n)
    p = float(special.erfc(abs(r) / math.sqrt(2.0 * n * var)))
    return LrOutcome(r, min(max(p, 0.0), 1.0), n)


@dataclass(frozen=True)
class Selection:
    scores: dict
    winner: CandidateKind
    tie: bool
    pairs: dict  # (kind_a, kind_b) -> LrOutcome for every ordered pair

    def runner_up(self):
        ordered = sorted(self.scores, key=lambda k: (-self.scores[k], KIND_ORDER.index(k)))
        return ordered[1] if len(ordered) > 1 else None


def selection_score(fits, sample, significance=SCORE_SIGNIFICANCE):
    """Score each candidate by the sum of its significant ratios against the others.

    Terms with p-value above ``significance`` contribute zero.  Equal top
    scores are resolved by candidate order and reported through ``tie``.
    """
    fits = list(fits)
    if len(fits) < 2:
        raise ValueError("selection needs at least two fits")
    kinds = [CandidateKind(f.kind) for f in fits]
    if len(set(kinds)) != len(kinds):
        raise ValueError("one fit per candidate kind")
    pairs = {}
    scores = {k: 0.0 for k in kinds}
    for i, fa in enumerate(fits):
        for j, fb in enumerate(fits):
            if i == j:
                continue
            outcome = likelihood_ratio(fa, fb, sample)
            pairs[(kinds[i], kinds[j])] = outcome
            if outcome.p_value <= significance:
                scores[kinds[i]] += outcome.r_statistic
    top = max(scores.values())
    leaders = [k for k in KIND_ORDER if k in scores and scores[k] == top]
    return Selection(scores, leaders[0], len(leaders) > 1, pairs)


def significance_stars(p_value):
    if p_value <= 0.01:
        return "***"
    if p_value <= 0.05:
        return "**"
    if p_value <= 0.10:
        return "*"
    return ""
