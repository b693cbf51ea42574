"""Theoretical correlation statistics of a field on a click-detector tree.

g^(K)(0) is the ratio of the K-th factorial moment to the K-th power of
the mean and is independent of splitting and efficiency.  theta^(K)(0) is
the joint no-click probability of a branch subset divided by the product
of the single-branch no-click probabilities; it equals 1 for Poissonian
light regardless of the tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import combinations

import numpy as np

from .errors import DivisionDomainError, DomainError, UndefinedStatisticError
from .modes import FieldSpec, field_factorial_moments, field_pgf

SPLIT_SUM_TOL = 1e-12


@dataclass
class DetectorTree:
    """N >= 2 branches with split fractions t_i (sum 1) and efficiencies
    eta_i in (0, 1]."""

    n_branches: int
    split: np.ndarray
    eff: np.ndarray

    def __post_init__(self):
        if self.n_branches < 2:
            raise DomainError(f"need at least 2 branches, got {self.n_branches}")
        self.split = np.asarray(self.split, dtype=float)
        self.eff = np.asarray(self.eff, dtype=float)
        if self.split.shape != (self.n_branches,):
            raise DomainError("split must have one entry per branch")
        if self.eff.shape != (self.n_branches,):
            raise DomainError("eff must have one entry per branch")
        if np.any(self.split < 0):
            raise DomainError("split fractions must be >= 0")
        if abs(self.split.sum() - 1.0) > SPLIT_SUM_TOL:
            raise DomainError(
                f"split fractions must sum to 1, got {self.split.sum()!r}"
            )
        if np.any(self.eff <= 0) or np.any(self.eff > 1):
            raise DomainError("efficiencies must lie in (0, 1]")

    @classmethod
    def equal_split(cls, n_branches: int, eff) -> "DetectorTree":
        """Tree with the ideal uniform 1/N split."""
        eff = np.broadcast_to(np.asarray(eff, dtype=float), (n_branches,))
        return cls(n_branches, np.full(n_branches, 1.0 / n_branches), eff.copy())

    def subset_absorption(self, subset) -> float:
        """Probability that a photon is routed to `subset` and detected."""
        idx = list(_check_subset(subset, self.n_branches, min_size=1))
        return float(np.sum(self.split[idx] * self.eff[idx]))


@dataclass
class CorrelationSet:
    """g and per-subset theta values with uncertainties, plus the
    single-branch click/no-click probabilities.

    n_pulses is 0 for theoretical sets; uncertainties are then 0.
    Subsets are tuples of sorted 0-based branch indices.
    """

    n_branches: int
    g: dict[int, tuple[float, float]]
    theta: dict[tuple[int, ...], tuple[float, float]]
    q_click: np.ndarray
    q_noclick: np.ndarray
    q_noclick_all: float
    n_pulses: int = 0

    def theta_subsets(self, size: int | None = None):
        subs = sorted(self.theta, key=lambda s: (len(s), s))
        if size is None:
            return subs
        return [s for s in subs if len(s) == size]


def _check_subset(subset, n_branches: int, min_size: int) -> tuple[int, ...]:
    idx = tuple(sorted(int(i) for i in subset))
    if len(idx) < min_size:
        raise DomainError(f"subset must contain at least {min_size} branches")
    if len(set(idx)) != len(idx):
        raise DomainError(f"subset has repeated branch indices: {subset}")
    if idx and (idx[0] < 0 or idx[-1] >= n_branches):
        raise DomainError(f"branch indices out of range 0..{n_branches - 1}")
    return idx


def g_theory(field: FieldSpec, K: int) -> float:
    """g^(K)(0) = f^(K) / (f^(1))^K from the field's factorial moments."""
    if K < 2:
        raise DomainError(f"g^(K) needs K >= 2, got {K}")
    if field.mean == 0:
        raise UndefinedStatisticError("g^(K)(0) is undefined for a vacuum field")
    f = field_factorial_moments(field, K)
    return float(f[K - 1] / f[0] ** K)


def q_noclick_subset(field: FieldSpec, tree: DetectorTree, subset) -> float:
    """Probability that no detector in `subset` clicks during a pulse.

    Equals the field generating function at 1 - sum_{i in S} eta_i t_i:
    each photon independently escapes the subset's detectors with that
    probability, and the result factorizes over modes.
    """
    absorb = tree.subset_absorption(subset)
    return field_pgf(field, 1.0 - absorb)


def theta_theory(field: FieldSpec, tree: DetectorTree, subset) -> float:
    """theta^(K)(0) = Q_S(0) / prod_{i in S} Q_i(0) for |S| = K >= 2."""
    idx = _check_subset(subset, tree.n_branches, min_size=2)
    singles = [q_noclick_subset(field, tree, (i,)) for i in idx]
    denom = float(np.prod(singles))
    if denom == 0.0:  # includes underflow of the product
        raise DivisionDomainError(
            "theta undefined: a single-branch no-click probability is 0"
        )
    return q_noclick_subset(field, tree, idx) / denom


def correlation_set_theory(
    field: FieldSpec, tree: DetectorTree, k_max: int
) -> CorrelationSet:
    """All g^(K) (K=2..k_max) and per-subset theta values for the tree."""
    n = tree.n_branches
    if not 2 <= k_max <= n:
        raise DomainError(f"k_max must lie in [2, {n}], got {k_max}")
    g = {K: (g_theory(field, K), 0.0) for K in range(2, k_max + 1)}
    theta = {}
    for size in range(2, k_max + 1):
        for subset in combinations(range(n), size):
            theta[subset] = (theta_theory(field, tree, subset), 0.0)
    q_noclick = np.array([q_noclick_subset(field, tree, (i,)) for i in range(n)])
    return CorrelationSet(
        n_branches=n,
        g=g,
        theta=theta,
        q_click=1.0 - q_noclick,
        q_noclick=q_noclick,
        q_noclick_all=q_noclick_subset(field, tree, tuple(range(n))),
        n_pulses=0,
    )
