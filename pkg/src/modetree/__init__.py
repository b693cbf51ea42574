"""modetree: multimode photon statistics on a click-detector tree.

Simulate multimode optical fields observed by non-photon-number-resolving
detectors, compute g^(K)(0) and theta^(K)(0) correlation statistics both
theoretically and from click records, and reconstruct the unknown mode
composition by weighted least-squares model selection.
"""

from .correlations import (
    CorrelationSet,
    DetectorTree,
    correlation_set_theory,
    g_theory,
    q_noclick_subset,
    theta_theory,
)
from .errors import (
    DivisionDomainError,
    DomainError,
    EmptyTallyError,
    ModetreeError,
    TruncationWarning,
    UndefinedStatisticError,
    ZeroSinglesError,
)
from .estimators import (
    BootstrapConfig,
    correlation_set_estimate,
    estimate_g,
    estimate_q,
    estimate_theta,
)
from .modes import (
    FieldSpec,
    ModeKind,
    OpticalMode,
    PnDistribution,
    factorial_moments,
    field_factorial_moments,
    field_pgf,
    pgf_eval,
    pn_distribution,
)
from .reconstruct import (
    FitResult,
    ModelFamily,
    OptConfig,
    ReconstructionResult,
    canonical_mean_vector,
    enumerate_models,
    fidelity,
    fit_model,
    lagrange_g,
    ls_objective,
    reconstruct,
)
from .simulator import (
    ClickTally,
    PatternDistribution,
    exact_click_distribution,
    simulate_pulses,
)

__all__ = [
    "BootstrapConfig",
    "ClickTally",
    "CorrelationSet",
    "DetectorTree",
    "DivisionDomainError",
    "DomainError",
    "EmptyTallyError",
    "FieldSpec",
    "FitResult",
    "ModeKind",
    "ModelFamily",
    "ModetreeError",
    "OptConfig",
    "OpticalMode",
    "PatternDistribution",
    "PnDistribution",
    "ReconstructionResult",
    "TruncationWarning",
    "UndefinedStatisticError",
    "ZeroSinglesError",
    "canonical_mean_vector",
    "correlation_set_estimate",
    "correlation_set_theory",
    "enumerate_models",
    "estimate_g",
    "estimate_q",
    "estimate_theta",
    "exact_click_distribution",
    "factorial_moments",
    "fidelity",
    "field_factorial_moments",
    "field_pgf",
    "fit_model",
    "g_theory",
    "lagrange_g",
    "ls_objective",
    "pgf_eval",
    "pn_distribution",
    "q_noclick_subset",
    "reconstruct",
    "simulate_pulses",
    "theta_theory",
]

__version__ = "0.1.0"
