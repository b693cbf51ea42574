"""End-to-end mode-structure reconstruction from simulated clicks.

Simulates a field whose composition is then treated as unknown,
estimates the correlation set, fits every candidate mode family, and
prints the ranking plus the pruned reconstruction next to the ground
truth.  Also contrasts the g+theta objective with the g-only variant.
"""

import numpy as np

from modetree import (
    BootstrapConfig,
    DetectorTree,
    FieldSpec,
    OptConfig,
    OpticalMode,
    canonical_mean_vector,
    correlation_set_estimate,
    reconstruct,
    simulate_pulses,
)

field = FieldSpec(
    [OpticalMode.thermal(0.5), OpticalMode.poissonian(0.3)]
)
tree = DetectorTree(4, np.full(4, 0.25), np.array([0.52, 0.66, 0.58, 0.61]))

tally = simulate_pulses(field, tree, 1_000_000, seed=7)
obs = correlation_set_estimate(tally, BootstrapConfig(100, seed=7))
truth = canonical_mean_vector(field)

for include_theta in (True, False):
    label = "g+theta" if include_theta else "g-only"
    res = reconstruct(
        obs, tree, s_max=2, truth=truth,
        opt_config=OptConfig(seed=7, include_theta=include_theta),
    )
    print(f"=== objective: {label}")
    print("family ranking (lower objective is better):")
    for fit in res.ranked:
        print(
            f"  {fit.family.describe():18s} LS = {fit.ls_value:.3e}  "
            f"params = {np.round(fit.params, 4)}"
        )
    print(
        f"selected: {res.pruned_family.describe()} "
        f"means {np.round(res.pruned_params, 4)} (truth {truth})"
    )
    print(f"S_rec = {res.s_rec}, fidelity = {res.fidelity:.4f}\n")
