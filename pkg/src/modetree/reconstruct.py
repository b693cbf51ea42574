"""Mode-structure reconstruction by weighted least squares.

Candidate mode families (how many Poissonian / thermal / single-photon
modes) are enumerated, each is fitted to an observed correlation set by
minimizing the squared g and theta residuals plus a single-branch
no-click penalty, and the family with the lowest objective wins, with a
parsimony tie-break.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .correlations import CorrelationSet, DetectorTree
from .errors import (
    AllFitsFailedError,
    DomainError,
    ModetreeError,
    UndefinedStatisticError,
)
from .modes import FieldSpec, ModeKind, OpticalMode

_FACT = np.array([1.0, 1.0, 2.0, 6.0, 24.0])


@dataclass(frozen=True)
class ModelFamily:
    """Counts of Poissonian / thermal / single-photon modes."""

    n_poi: int
    n_th: int
    n_sps: int

    def __post_init__(self):
        if self.n_poi not in (0, 1):
            raise DomainError("at most one Poissonian mode is identifiable")
        if self.n_th < 0 or self.n_sps < 0 or self.n_modes < 1:
            raise DomainError(f"invalid family {self}")

    @property
    def n_modes(self) -> int:
        return self.n_poi + self.n_th + self.n_sps

    def param_labels(self) -> list[str]:
        return (
            (["mu"] if self.n_poi else [])
            + [f"nu{j + 1}" for j in range(self.n_th)]
            + [f"p{j + 1}" for j in range(self.n_sps)]
        )

    def split_params(self, params):
        params = np.asarray(params, dtype=float)
        a = self.n_poi
        b = a + self.n_th
        return params[:a], params[a:b], params[b:]

    def to_field(self, params) -> FieldSpec:
        mus, nus, ps = self.split_params(params)
        modes = (
            [OpticalMode.poissonian(m) for m in mus]
            + [OpticalMode.thermal(n) for n in nus]
            + [OpticalMode.single_photon(p) for p in ps]
        )
        return FieldSpec(modes)

    def describe(self) -> str:
        parts = []
        if self.n_sps:
            parts.append(f"{self.n_sps} SPS")
        if self.n_th:
            parts.append(f"{self.n_th} Th")
        if self.n_poi:
            parts.append("1 Poi")
        return ", ".join(parts)


def enumerate_models(s_max: int, exact_s: int | None = None) -> list[ModelFamily]:
    """All families with 1 <= S <= s_max modes (or exactly exact_s)."""
    if s_max < 1:
        raise DomainError(f"s_max must be >= 1, got {s_max}")
    if exact_s is not None and not 1 <= exact_s <= s_max:
        raise DomainError(f"exact_s must lie in [1, {s_max}], got {exact_s}")
    totals = [exact_s] if exact_s is not None else range(1, s_max + 1)
    out = []
    for s in totals:
        for n_poi in range(min(1, s) + 1):
            for n_th in range(s - n_poi + 1):
                out.append(ModelFamily(n_poi, n_th, s - n_poi - n_th))
    return out


def lagrange_g(K: int, g2_exp: float) -> float:
    """Per-order weight on the g residual: 1/K! in the classical regime
    (g2_exp > 1), else 1."""
    if K < 2:
        raise DomainError(f"K must be >= 2, got {K}")
    return 1.0 / math.factorial(K) if g2_exp > 1.0 else 1.0


class _TheoryEngine:
    """Fast reconstructed-statistics evaluator bound to one observed set.

    The model-side g is matched to the provenance of the observed set:
    an estimated set (n_pulses > 0) holds click-coincidence ratios,
    which differ from the photon-statistics g at finite flux, so the
    candidate field is scored by its own click-based g on the same tree
    (inclusion-exclusion over no-click probabilities).  A theoretical
    set (n_pulses = 0) holds factorial-moment g values and is scored
    with the matching photon-statistics formula.
    """

    def __init__(self, observed: CorrelationSet, tree: DetectorTree, w_q: float):
        n = tree.n_branches
        self.k_list = sorted(observed.g)
        self.k_max = max(self.k_list)
        g2_exp = observed.g[2][0]
        self.lam_g = np.array([lagrange_g(K, g2_exp) for K in self.k_list])
        self.g_exp = np.array([observed.g[K][0] for K in self.k_list])
        self.subsets = sorted(observed.theta, key=lambda s: (len(s), s))
        self.theta_exp = np.array([observed.theta[s][0] for s in self.subsets])
        self.q_exp = np.asarray(observed.q_noclick, dtype=float)
        self.w_q = w_q
        self.click_based_g = observed.n_pulses > 0

        # no-click probability arguments for every branch subset (by bitmask)
        absorb = tree.split * tree.eff
        masks = np.arange(1 << n)
        member = (masks[:, None] >> np.arange(n)) & 1
        self.all_args = 1.0 - member @ absorb
        self.single_pos = np.array([1 << i for i in range(n)])
        self.theta_pos = np.array(
            [sum(1 << i for i in s) for s in self.subsets]
        )
        self.n_branches = n
        flat = np.concatenate([np.asarray(s, dtype=int) for s in self.subsets])
        self.flat_idx = flat
        self.offsets = np.concatenate(
            [[0], np.cumsum([len(s) for s in self.subsets])[:-1]]
        ).astype(int)
        self.comb = np.array(
            [[math.comb(k, j) for j in range(self.k_max + 1)] for k in range(self.k_max + 1)]
        )
        # inclusion-exclusion coefficients: P(all of S click) =
        # sum over T subset of S of (-1)^|T| Q_T(0)
        popcount = member.sum(axis=1)
        self.g_sign = {}
        self.g_subset_idx = {}
        for K in self.k_list:
            subs = list(combinations(range(n), K))
            rows = np.zeros((len(subs), 1 << n))
            for r, s in enumerate(subs):
                smask = sum(1 << i for i in s)
                inside = (masks & ~smask) == 0
                rows[r, inside] = (-1.0) ** popcount[inside]
            self.g_sign[K] = rows
            self.g_subset_idx[K] = np.array(subs, dtype=int)

    def statistics(self, family: ModelFamily, params: np.ndarray):
        """(g_rec per K, theta_rec per subset, single-branch Q(0)_rec)."""
        params = np.asarray(params, dtype=float)
        mean = params.sum()
        if mean <= 0.0:
            raise UndefinedStatisticError(
                "reconstructed statistics undefined for a zero-mean field"
            )
        mus, nus, ps = family.split_params(params)

        one_minus = 1.0 - self.all_args
        vals = np.ones_like(self.all_args)
        for mu in mus:
            vals *= np.exp(-mu * one_minus)
        for nu in nus:
            vals *= 1.0 / (1.0 + nu * one_minus)
        for p in ps:
            vals *= 1.0 - p * one_minus
        q_singles = vals[self.single_pos]
        q_subsets = vals[self.theta_pos]
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = np.multiply.reduceat(q_singles[self.flat_idx], self.offsets)
            theta_rec = q_subsets / denom

        if self.click_based_g:
            p_click = 1.0 - q_singles
            g_rec = np.empty(len(self.k_list))
            with np.errstate(divide="ignore", invalid="ignore"):
                for i, K in enumerate(self.k_list):
                    all_click = self.g_sign[K] @ vals
                    d = np.prod(p_click[self.g_subset_idx[K]], axis=1)
                    g_rec[i] = np.mean(all_click / d)
        else:
            kmax = self.k_max
            karr = np.arange(kmax + 1)
            f = np.zeros(kmax + 1)
            f[0] = 1.0
            for mu in mus:
                f = self._fold(f, mu**karr.astype(float))
            for nu in nus:
                f = self._fold(f, _FACT[: kmax + 1] * nu**karr.astype(float))
            for p in ps:
                fm = np.zeros(kmax + 1)
                fm[0] = 1.0
                fm[1] = p
                f = self._fold(f, fm)
            g_rec = np.array([f[K] / mean**K for K in self.k_list])
        return g_rec, theta_rec, q_singles

    def _fold(self, f, fm):
        new = np.empty_like(f)
        for k in range(len(f)):
            new[k] = (self.comb[k, : k + 1] * f[: k + 1] * fm[k::-1]).sum()
        return new

    def terms(self, family, params):
        """(g term, unweighted theta term, no-click penalty term)."""
        g_rec, theta_rec, q_singles = self.statistics(family, params)
        if np.all(np.isfinite(g_rec)):
            g_term = float(self.lam_g @ (g_rec - self.g_exp) ** 2)
        else:
            g_term = float("inf")
        if np.all(np.isfinite(theta_rec)):
            theta_term = float(((theta_rec - self.theta_exp) ** 2).sum())
        else:
            theta_term = float("inf")
        q_term = float(((q_singles - self.q_exp) ** 2).sum())
        return g_term, theta_term, q_term

    def objective(self, family, params, lambda_theta):
        try:
            g_term, theta_term, q_term = self.terms(family, params)
        except UndefinedStatisticError:
            return float("inf")
        if lambda_theta == 0.0:
            theta_part = 0.0  # keeps g-only mode finite when theta blows up
        else:
            theta_part = lambda_theta * theta_term
        return g_term + theta_part + self.w_q * q_term


def ls_objective(
    params,
    family: ModelFamily,
    observed: CorrelationSet,
    tree: DetectorTree,
    lambda_theta: float,
    w_q: float = 1.0,
) -> float:
    """Weighted least-squares objective for one candidate family.

    Sum over K of lambda_g(K) (g_rec - g_exp)^2, plus lambda_theta times
    the per-subset theta residuals, plus w_q times the single-branch
    no-click residuals.  Raises for degenerate (zero-mean) parameters.
    """
    engine = _TheoryEngine(observed, tree, w_q)
    g_term, theta_term, q_term = engine.terms(family, np.asarray(params, float))
    return g_term + lambda_theta * theta_term + w_q * q_term


@dataclass(frozen=True)
class OptConfig:
    """Inner-optimizer and lambda-recursion settings."""

    n_restarts: int = 8
    seed: int = 0
    xatol: float = 1e-10
    fatol: float = 1e-14
    maxiter: int = 10000
    w_q: float = 1.0
    include_theta: bool = True  # False reproduces the g-only comparison method
    balance_tol: float = 0.1
    damping: float = 0.5
    max_lambda_iter: int = 10
    term_floor: float = 1e-18


@dataclass
class FitResult:
    family: ModelFamily
    params: np.ndarray  # canonical order: mu, thermal desc, single-photon desc
    ls_value: float
    lambda_theta: float
    converged: bool
    n_restarts_used: int

    def mean_total(self) -> float:
        return float(np.sum(self.params))


def _mean_scale(observed: CorrelationSet, tree: DetectorTree) -> float:
    """Crude total-mean estimate from single-branch no-click probabilities."""
    q = np.clip(observed.q_noclick, 1e-12, 1.0)
    per_branch = -np.log(q) / np.clip(tree.split * tree.eff, 1e-12, None)
    return float(np.mean(per_branch))


def _canonicalize(family: ModelFamily, params: np.ndarray) -> np.ndarray:
    mus, nus, ps = family.split_params(params)
    return np.concatenate([mus, np.sort(nus)[::-1], np.sort(ps)[::-1]])


def fit_model(
    family: ModelFamily,
    observed: CorrelationSet,
    tree: DetectorTree,
    opt_config: OptConfig | None = None,
) -> FitResult:
    """Fit one family by multi-start Nelder-Mead inside a lambda_theta
    balance recursion.

    The recursion starts at lambda_theta = 1, refitting with
    lambda_theta damped toward (g term)/(theta term) until the two
    objective contributions agree within balance_tol or the iteration
    cap is hit.  With include_theta=False a single fit at
    lambda_theta = 0 is performed (no-click penalty retained).
    """
    opt = opt_config or OptConfig()
    engine = _TheoryEngine(observed, tree, opt.w_q)

    scale = max(1.0, 5.0 * _mean_scale(observed, tree))
    bounds = (
        [(0.0, scale)] * (family.n_poi + family.n_th)
        + [(0.0, 1.0)] * family.n_sps
    )
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    sampler = qmc.LatinHypercube(d=family.n_modes, seed=opt.seed)
    lhs_starts = qmc.scale(sampler.random(opt.n_restarts), lo, hi)
    # structured starts: total mean split across modes (slightly staggered
    # so permutation-equivalent modes separate), plus variants with one
    # mode switched off, so flat directions can settle at the boundary
    mean_est = _mean_scale(observed, tree)
    m = family.n_modes
    shares = np.linspace(1.25, 0.75, m)
    shares /= shares.sum()
    heuristic = np.clip(mean_est * shares, lo + 1e-6, hi)
    structured = [heuristic]
    for j in range(m):
        off = heuristic.copy()
        off[j] = 0.0
        structured.append(off)
    starts = np.vstack([lhs_starts, structured])

    n_runs = 0

    def run_fits(start_points, lam):
        nonlocal n_runs
        best = None
        all_ok = True
        for x0 in start_points:
            res = minimize(
                lambda x: engine.objective(family, x, lam),
                np.asarray(x0, dtype=float),
                method="Nelder-Mead",
                bounds=bounds,
                options={
                    "xatol": opt.xatol,
                    "fatol": opt.fatol,
                    "maxiter": opt.maxiter,
                    "maxfev": opt.maxiter,
                },
            )
            n_runs += 1
            all_ok = all_ok and bool(res.success)
            if best is None or res.fun < best.fun:
                best = res
        return best, all_ok

    if not opt.include_theta:
        best, all_ok = run_fits(starts, 0.0)
        return FitResult(
            family,
            _canonicalize(family, best.x),
            float(best.fun),
            0.0,
            all_ok and np.isfinite(best.fun),
            n_runs,
        )

    lam = 1.0
    recursion_ok = False
    best = None
    all_ok = True
    n_refit = max(2, opt.n_restarts // 4)
    for it in range(opt.max_lambda_iter):
        points = starts if it == 0 else np.vstack(
            [best.x, heuristic, qmc.scale(sampler.random(n_refit), lo, hi)]
        )
        best, all_ok = run_fits(points, lam)
        if not np.isfinite(best.fun):
            break
        try:
            g_term, theta_term, _ = engine.terms(family, best.x)
        except UndefinedStatisticError:
            break
        weighted_theta = lam * theta_term
        if g_term < opt.term_floor and weighted_theta < opt.term_floor:
            recursion_ok = True
            break
        if theta_term < opt.term_floor:
            recursion_ok = True
            break
        if abs(g_term - weighted_theta) <= opt.balance_tol * max(
            g_term, weighted_theta
        ):
            recursion_ok = True
            break
        lam = (1.0 - opt.damping) * lam + opt.damping * g_term / theta_term

    converged = recursion_ok and all_ok and best is not None and np.isfinite(best.fun)
    if best is None:
        raise UndefinedStatisticError(f"every fit of family {family} failed")
    return FitResult(
        family,
        _canonicalize(family, best.x),
        float(best.fun),
        lam,
        converged,
        n_runs,
    )


@dataclass
class ReconstructionResult:
    best: FitResult
    ranked: list[FitResult]
    pruned_family: ModelFamily | None
    pruned_params: np.ndarray
    s_rec: int
    fidelity: float | None = None


def fidelity(m_e, m_x) -> float:
    """Normalized overlap 2|a.b| / (|a|^2 + |b|^2) of mean-photon vectors.

    Vectors are assumed canonically ordered (Poissonian, thermal
    descending, single-photon descending) and are zero-padded to equal
    length; 1 iff identical, 0 iff orthogonal.
    """
    a = np.asarray(m_e, dtype=float)
    b = np.asarray(m_x, dtype=float)
    n = max(len(a), len(b))
    a = np.pad(a, (0, n - len(a)))
    b = np.pad(b, (0, n - len(b)))
    denom = a @ a + b @ b
    if denom == 0.0:
        raise UndefinedStatisticError("fidelity undefined for two zero vectors")
    return float(2.0 * abs(a @ b) / denom)


def canonical_mean_vector(field: FieldSpec) -> np.ndarray:
    """Mean-photon vector in the canonical order used by fidelity."""
    mus = [m.mean for m in field.modes if m.kind is ModeKind.POISSONIAN]
    nus = sorted(
        (m.mean for m in field.modes if m.kind is ModeKind.THERMAL), reverse=True
    )
    ps = sorted(
        (m.mean for m in field.modes if m.kind is ModeKind.SINGLE_PHOTON),
        reverse=True,
    )
    return np.array(mus + nus + ps)


def _prune(family: ModelFamily, params: np.ndarray, threshold: float):
    mus, nus, ps = family.split_params(params)
    mus = mus[mus >= threshold]
    nus = nus[nus >= threshold]
    ps = ps[ps >= threshold]
    if len(mus) + len(nus) + len(ps) == 0:
        return None, np.array([])
    fam = ModelFamily(len(mus), len(nus), len(ps))
    return fam, np.concatenate([mus, nus, ps])


TIE_TOL = 1e-9


def reconstruct(
    observed: CorrelationSet,
    tree: DetectorTree,
    s_max: int,
    truth=None,
    exact_s: int | None = None,
    opt_config: OptConfig | None = None,
    presence_threshold: float = 1e-3,
) -> ReconstructionResult:
    """Fit every candidate family and select the lowest-objective model.

    Families whose objective ties the minimum within TIE_TOL (relative,
    floored at absolute TIE_TOL) are resolved toward fewer modes.
    `truth` is a canonical mean-photon vector; when given, the fidelity
    against the pruned reconstruction is reported.
    """
    if s_max > tree.n_branches:
        raise DomainError(
            f"s_max={s_max} exceeds the tree's photon-number resolution "
            f"N={tree.n_branches}"
        )
    families = enumerate_models(s_max, exact_s)
    fits: list[FitResult] = []
    failures: list[tuple[ModelFamily, Exception]] = []
    for i, fam in enumerate(families):
        try:
            fits.append(fit_model(fam, observed, tree, opt_config))
        except ModetreeError as exc:
            failures.append((fam, exc))
    if not fits:
        raise AllFitsFailedError(
            f"every candidate family failed to fit: {failures}"
        )

    order = {fam: i for i, fam in enumerate(families)}
    ranked = sorted(fits, key=lambda f: (f.ls_value, order[f.family]))
    ls_min = ranked[0].ls_value
    tol = TIE_TOL * max(1.0, ls_min)
    tied = [f for f in ranked if f.ls_value - ls_min <= tol]
    best = min(tied, key=lambda f: (f.family.n_modes, order[f.family]))

    pruned_family, pruned_params = _prune(
        best.family, best.params, presence_threshold
    )
    fid = None
    if truth is not None:
        fid = fidelity(truth, pruned_params)
    return ReconstructionResult(
        best=best,
        ranked=ranked,
        pruned_family=pruned_family,
        pruned_params=pruned_params,
        s_rec=len(pruned_params),
        fidelity=fid,
    )
