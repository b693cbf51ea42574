"""Photon-number statistics of optical modes and composite fields.

A field is an incoherent combination of independent statistical modes:
Poissonian (coherent/laser), thermal (Bose-Einstein), and single-photon
(Bernoulli emission).  Everything downstream is built from the per-mode
probability generating function, the factorial moments, and the truncated
photon-number distribution of the composite field.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .errors import DomainError, TruncationWarning

DEFAULT_TRUNCATION_BOUND = 1e-10
MAX_TRUNCATION_N = 200


class ModeKind(Enum):
    POISSONIAN = "poissonian"
    THERMAL = "thermal"
    SINGLE_PHOTON = "single_photon"


@dataclass(frozen=True)
class OpticalMode:
    """One statistical mode with its mean photon number per pulse.

    For a single-photon mode the parameter is the emission probability,
    which coincides with the mean photon number.
    """

    kind: ModeKind
    mean: float

    def __post_init__(self):
        if not math.isfinite(self.mean) or self.mean < 0:
            raise DomainError(f"mode mean must be finite and >= 0, got {self.mean}")
        if self.kind is ModeKind.SINGLE_PHOTON and self.mean > 1:
            raise DomainError(
                f"single-photon emission probability must be <= 1, got {self.mean}"
            )

    @classmethod
    def poissonian(cls, mu: float) -> "OpticalMode":
        return cls(ModeKind.POISSONIAN, float(mu))

    @classmethod
    def thermal(cls, nu: float) -> "OpticalMode":
        return cls(ModeKind.THERMAL, float(nu))

    @classmethod
    def single_photon(cls, p: float) -> "OpticalMode":
        return cls(ModeKind.SINGLE_PHOTON, float(p))


@dataclass(frozen=True)
class FieldSpec:
    """Ordered collection of independent modes; may be empty (vacuum).

    At most one Poissonian mode is allowed: a sum of Poissonian modes is
    itself Poissonian, so multi-Poissonian inputs must be merged by the
    caller into a single mode carrying the summed mean.
    """

    modes: tuple[OpticalMode, ...] = ()

    def __init__(self, modes=()):
        object.__setattr__(self, "modes", tuple(modes))
        n_poi = sum(1 for m in self.modes if m.kind is ModeKind.POISSONIAN)
        if n_poi > 1:
            raise DomainError(
                f"at most one Poissonian mode is allowed (got {n_poi}); "
                "merge them into a single mode with the summed mean"
            )

    @property
    def mean(self) -> float:
        return sum(m.mean for m in self.modes)

    def with_mode(self, mode: OpticalMode) -> "FieldSpec":
        return FieldSpec(self.modes + (mode,))


def pgf_eval(mode: OpticalMode, x) -> float:
    """Probability generating function sum_n p_n x^n for x in [0, 1].

    Accepts a scalar or ndarray argument; always 1 at x=1.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("generating-function argument must lie in [0, 1]")
    if mode.kind is ModeKind.POISSONIAN:
        out = np.exp(-mode.mean * (1.0 - x))
    elif mode.kind is ModeKind.THERMAL:
        out = 1.0 / (1.0 + mode.mean * (1.0 - x))
    else:
        out = 1.0 - mode.mean * (1.0 - x)
    return out if out.ndim else float(out)


def field_pgf(field: FieldSpec, x) -> float:
    """Generating function of the composite field: product over modes."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for mode in field.modes:
        out = out * pgf_eval(mode, x)
    return out if out.ndim else float(out)


def factorial_moments(mode: OpticalMode, k_max: int) -> np.ndarray:
    """Falling-factorial moments E{n!/(n-k)!} for k = 1..k_max."""
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    k = np.arange(1, k_max + 1)
    if mode.kind is ModeKind.POISSONIAN:
        return mode.mean ** k.astype(float)
    if mode.kind is ModeKind.THERMAL:
        return np.array([math.factorial(int(i)) * mode.mean**int(i) for i in k])
    out = np.zeros(k_max)
    out[0] = mode.mean
    return out


def field_factorial_moments(field: FieldSpec, k_max: int) -> np.ndarray:
    """Factorial moments of the composite field, k = 1..k_max.

    Independent modes add, so the k-th moment follows the binomial
    convolution f_k(X+Y) = sum_j C(k,j) f_j(X) f_{k-j}(Y), with f_0 = 1.
    """
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    total = np.zeros(k_max + 1)  # index k, with f_0 = 1
    total[0] = 1.0
    for mode in field.modes:
        fm = np.concatenate(([1.0], factorial_moments(mode, k_max)))
        new = np.zeros_like(total)
        for k in range(k_max + 1):
            new[k] = sum(
                math.comb(k, j) * total[j] * fm[k - j] for j in range(k + 1)
            )
        total = new
    return total[1:]


def _mode_pn(mode: OpticalMode, n_max: int) -> np.ndarray:
    """Photon-number law of one mode, truncated at n_max."""
    n = np.arange(n_max + 1)
    if mode.kind is ModeKind.POISSONIAN:
        return stats.poisson.pmf(n, mode.mean)
    if mode.kind is ModeKind.THERMAL:
        nu = mode.mean
        return (nu / (1.0 + nu)) ** n / (1.0 + nu)
    out = np.zeros(n_max + 1)
    out[0] = 1.0 - mode.mean
    if n_max >= 1:
        out[1] = mode.mean
    return out


@dataclass(frozen=True)
class PnDistribution:
    """Truncated photon-number distribution with its dropped mass."""

    probs: np.ndarray
    truncation_deficit: float


def pn_distribution(
    field: FieldSpec,
    n_max: int | None = None,
    deficit_bound: float = DEFAULT_TRUNCATION_BOUND,
) -> PnDistribution:
    """Photon-number distribution of the field, truncated at n_max.

    When n_max is None the truncation point is grown until the dropped
    mass is below deficit_bound, capped at MAX_TRUNCATION_N.  A
    TruncationWarning is emitted if the bound cannot be met.
    """
    if n_max is not None:
        if n_max < 0:
            raise DomainError(f"n_max must be >= 0, got {n_max}")
        return _pn_at(field, n_max, deficit_bound, warn=True)

    n = 16
    while True:
        dist = _pn_at(field, n, deficit_bound, warn=(n >= MAX_TRUNCATION_N))
        if dist.truncation_deficit < deficit_bound or n >= MAX_TRUNCATION_N:
            return dist
        n = min(2 * n, MAX_TRUNCATION_N)


def _pn_at(field, n_max, deficit_bound, warn) -> PnDistribution:
    probs = np.zeros(n_max + 1)
    probs[0] = 1.0
    for mode in field.modes:
        probs = np.convolve(probs, _mode_pn(mode, n_max))[: n_max + 1]
    deficit = max(0.0, 1.0 - float(probs.sum()))
    if warn and deficit > deficit_bound:
        warnings.warn(
            f"photon-number truncation at n_max={n_max} drops {deficit:.3e} "
            f"probability mass (bound {deficit_bound:.1e})",
            TruncationWarning,
            stacklevel=2,
        )
    return PnDistribution(probs=probs, truncation_deficit=deficit)
