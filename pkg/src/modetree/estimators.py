"""Click-based estimators: g_exp, per-subset theta_exp, no-click
probabilities, with pulse-level bootstrap uncertainties.

All statistics are marginals of the 2^N click-pattern histogram, so the
same formulas apply to an exact pattern distribution treated as an
infinite-pulse tally.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .correlations import CorrelationSet, _check_subset
from .errors import DivisionDomainError, DomainError, EmptyTallyError, ZeroSinglesError
from .simulator import ClickTally


@dataclass(frozen=True)
class BootstrapConfig:
    """Multinomial pattern-histogram resampling at the pulse level."""

    n_resamples: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_resamples < 2:
            raise DomainError(
                f"n_resamples must be >= 2, got {self.n_resamples}"
            )


def _pattern_probs(tally: ClickTally) -> np.ndarray:
    if tally.n_pulses == 0:
        raise EmptyTallyError("tally has zero pulses")
    return tally.counts / tally.n_pulses


def _subset_masks(subset, n_branches) -> int:
    return sum(1 << i for i in subset)


def click_prob(probs: np.ndarray, n_branches: int, branch: int) -> float:
    patterns = np.arange(len(probs))
    return float(probs[(patterns >> branch & 1) == 1].sum())


def noclick_prob_subset(probs: np.ndarray, n_branches: int, subset) -> float:
    mask = _subset_masks(subset, n_branches)
    patterns = np.arange(len(probs))
    return float(probs[(patterns & mask) == 0].sum())


def allclick_prob_subset(probs: np.ndarray, n_branches: int, subset) -> float:
    mask = _subset_masks(subset, n_branches)
    patterns = np.arange(len(probs))
    return float(probs[(patterns & mask) == mask].sum())


def g_from_pattern_probs(probs: np.ndarray, n_branches: int, K: int) -> float:
    """Subset-averaged click-based g^(K): the all-K-click probability over
    the product of single-click probabilities, averaged over all size-K
    subsets."""
    singles = [click_prob(probs, n_branches, i) for i in range(n_branches)]
    values = []
    for subset in combinations(range(n_branches), K):
        denom = float(np.prod([singles[i] for i in subset]))
        if denom == 0.0:
            raise ZeroSinglesError(
                f"branch in subset {subset} has zero click probability"
            )
        values.append(allclick_prob_subset(probs, n_branches, subset) / denom)
    return float(np.mean(values))


def theta_from_pattern_probs(probs: np.ndarray, n_branches: int, subset) -> float:
    singles = [noclick_prob_subset(probs, n_branches, (i,)) for i in subset]
    if any(q == 0.0 for q in singles):
        raise DivisionDomainError(
            "theta undefined: a single-branch no-click marginal is 0"
        )
    joint = noclick_prob_subset(probs, n_branches, subset)
    return joint / float(np.prod(singles))


def estimate_q(tally: ClickTally):
    """Marginal probabilities from a tally.

    Returns (per-branch click, per-branch no-click, per-subset no-click,
    per-subset all-click); the subset dicts cover all subsets of size >= 2.
    """
    probs = _pattern_probs(tally)
    n = tally.n_branches
    q_click = np.array([click_prob(probs, n, i) for i in range(n)])
    subset_noclick = {}
    subset_allclick = {}
    for size in range(2, n + 1):
        for subset in combinations(range(n), size):
            subset_noclick[subset] = noclick_prob_subset(probs, n, subset)
            subset_allclick[subset] = allclick_prob_subset(probs, n, subset)
    return q_click, 1.0 - q_click, subset_noclick, subset_allclick


def _bootstrap_sd(tally, boot, statistic) -> float:
    """Bootstrap standard deviation of `statistic` over multinomially
    resampled tallies; non-finite resamples are dropped."""
    rng = np.random.Generator(np.random.Philox(key=boot.seed % (1 << 64)))
    probs = _pattern_probs(tally)
    resampled = rng.multinomial(tally.n_pulses, probs, size=boot.n_resamples)
    values = []
    for counts in resampled:
        try:
            values.append(statistic(counts / tally.n_pulses))
        except (ZeroSinglesError, DivisionDomainError):
            continue
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if len(values) < 2:
        return float("nan")
    return float(values.std(ddof=1))


def estimate_g(
    tally: ClickTally, K: int, boot: BootstrapConfig | None = None
) -> tuple[float, float]:
    """Click-based g^(K) estimate with bootstrap uncertainty."""
    if not 2 <= K <= tally.n_branches:
        raise DomainError(f"K must lie in [2, {tally.n_branches}], got {K}")
    probs = _pattern_probs(tally)
    value = g_from_pattern_probs(probs, tally.n_branches, K)
    boot = boot or BootstrapConfig()
    sd = _bootstrap_sd(
        tally, boot, lambda p: g_from_pattern_probs(p, tally.n_branches, K)
    )
    return value, sd


def estimate_theta(
    tally: ClickTally, subset, boot: BootstrapConfig | None = None
) -> tuple[float, float]:
    """Per-subset theta^(K) estimate with bootstrap uncertainty."""
    idx = _check_subset(subset, tally.n_branches, min_size=2)
    probs = _pattern_probs(tally)
    value = theta_from_pattern_probs(probs, tally.n_branches, idx)
    boot = boot or BootstrapConfig()
    sd = _bootstrap_sd(
        tally, boot, lambda p: theta_from_pattern_probs(p, tally.n_branches, idx)
    )
    return value, sd


def correlation_set_estimate(
    tally: ClickTally, boot: BootstrapConfig | None = None
) -> CorrelationSet:
    """Full experimental CorrelationSet from a tally.

    One shared set of bootstrap resamples provides every uncertainty.
    """
    boot = boot or BootstrapConfig()
    probs = _pattern_probs(tally)
    n = tally.n_branches
    orders = range(2, n + 1)
    subsets = [s for size in orders for s in combinations(range(n), size)]

    g_values = {K: g_from_pattern_probs(probs, n, K) for K in orders}
    theta_values = {s: theta_from_pattern_probs(probs, n, s) for s in subsets}

    rng = np.random.Generator(np.random.Philox(key=boot.seed % (1 << 64)))
    resampled = rng.multinomial(tally.n_pulses, probs, size=boot.n_resamples)
    g_samples = {K: [] for K in orders}
    theta_samples = {s: [] for s in subsets}
    for counts in resampled:
        p = counts / tally.n_pulses
        for K in orders:
            try:
                g_samples[K].append(g_from_pattern_probs(p, n, K))
            except ZeroSinglesError:
                pass
        for s in subsets:
            try:
                theta_samples[s].append(theta_from_pattern_probs(p, n, s))
            except DivisionDomainError:
                pass

    def sd(samples):
        v = np.asarray(samples, dtype=float)
        v = v[np.isfinite(v)]
        return float(v.std(ddof=1)) if len(v) >= 2 else float("nan")

    q_noclick = np.array([noclick_prob_subset(probs, n, (i,)) for i in range(n)])
    return CorrelationSet(
        n_branches=n,
        g={K: (g_values[K], sd(g_samples[K])) for K in orders},
        theta={s: (theta_values[s], sd(theta_samples[s])) for s in subsets},
        q_click=1.0 - q_noclick,
        q_noclick=q_noclick,
        q_noclick_all=noclick_prob_subset(probs, n, tuple(range(n))),
        n_pulses=tally.n_pulses,
    )
