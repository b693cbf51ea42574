"""Monte Carlo click simulation and an exact click-pattern oracle.

Pulses are simulated in fixed-size chunks; each chunk owns a Philox
stream keyed by (seed, chunk index), so tallies are bit-identical for any
worker count.  The exact oracle enumerates click patterns by
inclusion-exclusion over no-click branch subsets, averaged over the
truncated photon-number distribution (independent of the generating-
function route used by the correlations module).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DomainError
from .modes import FieldSpec, ModeKind, pn_distribution

DEFAULT_CHUNK_SIZE = 1 << 16


@dataclass
class ClickTally:
    """Per-pulse click-pattern histogram.

    counts has length 2^N and is indexed by the pattern bitmask: bit i is
    set iff detector i clicked during the pulse.
    """

    n_branches: int
    n_pulses: int
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (1 << self.n_branches,):
            raise DomainError(
                f"counts must have length 2^{self.n_branches}, "
                f"got {self.counts.shape}"
            )
        if np.any(self.counts < 0) or int(self.counts.sum()) != self.n_pulses:
            raise DomainError("counts must be >= 0 and sum to n_pulses")

    def __add__(self, other: "ClickTally") -> "ClickTally":
        if other.n_branches != self.n_branches:
            raise DomainError("cannot merge tallies with different trees")
        return ClickTally(
            self.n_branches,
            self.n_pulses + other.n_pulses,
            self.counts + other.counts,
        )


@dataclass
class PatternDistribution:
    """Exact click-pattern probabilities with the truncation deficit."""

    n_branches: int
    probs: np.ndarray
    truncation_deficit: float


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    key = np.array([seed % (1 << 64), chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_mode_counts(mode, rng, size: int) -> np.ndarray:
    if mode.kind is ModeKind.POISSONIAN:
        return rng.poisson(mode.mean, size)
    if mode.kind is ModeKind.THERMAL:
        if mode.mean == 0:
            return np.zeros(size, dtype=np.int64)
        # geometric on {0,1,...} by CDF inversion, success prob 1/(1+nu)
        q = mode.mean / (1.0 + mode.mean)
        u = rng.random(size)
        n = np.ceil(np.log1p(-u) / np.log(q) - 1.0).astype(np.int64)
        return np.maximum(n, 0)
    return (rng.random(size) < mode.mean).astype(np.int64)


def _simulate_chunk(field, tree, n_pulses, seed, chunk_index) -> np.ndarray:
    rng = _chunk_rng(seed, chunk_index)
    n_branches = tree.n_branches
    photons = np.zeros(n_pulses, dtype=np.int64)
    for mode in field.modes:
        photons += _sample_mode_counts(mode, rng, n_pulses)
    total = int(photons.sum())
    counts = np.zeros(1 << n_branches, dtype=np.int64)
    if total == 0:
        counts[0] = n_pulses
        return counts

    pulse_idx = np.repeat(np.arange(n_pulses), photons)
    cum_split = np.cumsum(tree.split)
    branch = np.searchsorted(cum_split, rng.random(total), side="right")
    branch = np.minimum(branch, n_branches - 1)  # guard float round-off
    detected = rng.random(total) < tree.eff[branch]

    clicked = np.zeros((n_pulses, n_branches), dtype=bool)
    clicked[pulse_idx[detected], branch[detected]] = True
    patterns = clicked @ (1 << np.arange(n_branches))
    np.add.at(counts, patterns, 1)
    return counts


def simulate_pulses(
    field: FieldSpec,
    tree,
    n_pulses: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    n_workers: int = 1,
) -> ClickTally:
    """Simulate pulses through the tree and tally click patterns.

    Per pulse: draw the photon number of every mode, route each photon to
    branch i with probability t_i, detect it with probability eta_i, and
    set bit i if at least one photon was detected there (non-PNR).
    Deterministic for fixed (field, tree, n_pulses, seed, chunk_size)
    regardless of n_workers.
    """
    if n_pulses < 0:
        raise DomainError(f"n_pulses must be >= 0, got {n_pulses}")
    if chunk_size < 1:
        raise DomainError(f"chunk_size must be >= 1, got {chunk_size}")
    n_chunks = (n_pulses + chunk_size - 1) // chunk_size
    sizes = [
        min(chunk_size, n_pulses - c * chunk_size) for c in range(n_chunks)
    ]

    def run(c):
        return _simulate_chunk(field, tree, sizes[c], seed, c)

    counts = np.zeros(1 << tree.n_branches, dtype=np.int64)
    if n_workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for chunk_counts in pool.map(run, range(n_chunks)):
                counts += chunk_counts
    else:
        for c in range(n_chunks):
            counts += run(c)
    return ClickTally(tree.n_branches, n_pulses, counts)


def exact_click_distribution(
    field: FieldSpec, tree, n_max: int | None = None
) -> PatternDistribution:
    """Exact click-pattern distribution by truncated enumeration.

    For every branch subset S the no-click probability is
    sum_n p_n (1 - sum_{i in S} eta_i t_i)^n over the truncated
    photon-number law; exact pattern probabilities follow by
    inclusion-exclusion over which clicking branches fail to click.
    """
    n_branches = tree.n_branches
    dist = pn_distribution(field, n_max)
    n = np.arange(len(dist.probs))

    def noclick(idx: tuple[int, ...]) -> float:
        if not idx:
            return float(dist.probs.sum())
        escape = 1.0 - float(np.sum(tree.split[list(idx)] * tree.eff[list(idx)]))
        return float(dist.probs @ escape**n)

    q = {
        subset: noclick(subset)
        for size in range(n_branches + 1)
        for subset in combinations(range(n_branches), size)
    }

    probs = np.zeros(1 << n_branches)
    for pattern in range(1 << n_branches):
        clicking = tuple(i for i in range(n_branches) if pattern >> i & 1)
        silent = tuple(i for i in range(n_branches) if not pattern >> i & 1)
        p = 0.0
        for size in range(len(clicking) + 1):
            for extra in combinations(clicking, size):
                p += (-1.0) ** size * q[tuple(sorted(silent + extra))]
        probs[pattern] = p
    np.clip(probs, 0.0, None, out=probs)
    return PatternDistribution(n_branches, probs, dist.truncation_deficit)
