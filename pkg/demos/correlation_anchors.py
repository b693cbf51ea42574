"""Textbook anchor values of g^(K)(0) and theta^(K)(0).

Walks through the closed-form correlation values for single-mode fields
(thermal light g^(K) = K!, Poissonian light g = theta = 1, a single
emitter g^(2) = 0) and the classic n-emitter result
g^(2) = 1 - 1/n, then shows how theta ignores any Poissonian
admixture while g does not.
"""

import math

import numpy as np

from modetree import (
    DetectorTree,
    FieldSpec,
    OpticalMode,
    g_theory,
    theta_theory,
)

tree = DetectorTree(4, np.full(4, 0.25), np.array([0.52, 0.66, 0.58, 0.61]))

print("single thermal mode, nu = 0.7:")
th = FieldSpec([OpticalMode.thermal(0.7)])
for K in (2, 3, 4):
    print(f"  g^({K})(0) = {g_theory(th, K):.6f}   (K! = {math.factorial(K)})")

print("\nsingle Poissonian mode, mu = 0.5 (coherent-state statistics):")
poi = FieldSpec([OpticalMode.poissonian(0.5)])
for K in (2, 3, 4):
    print(f"  g^({K})(0) = {g_theory(poi, K):.6f}")
print(f"  theta on branches (0,1) = {theta_theory(poi, tree, (0, 1)):.6f}")

print("\nsingle two-level emitter, p = 0.05:")
sps = FieldSpec([OpticalMode.single_photon(0.05)])
print(f"  g^(2)(0) = {g_theory(sps, 2):.6f}  (antibunched: exactly 0)")

print("\nn identical emitters -> g^(2) = 1 - 1/n:")
for n in (2, 3, 5):
    f = FieldSpec([OpticalMode.single_photon(0.04)] * n)
    print(f"  n = {n}: g^(2)(0) = {g_theory(f, 2):.6f}  (expected {1 - 1 / n:.6f})")

print("\ntheta is blind to a Poissonian component, g is not:")
base = [OpticalMode.thermal(0.3), OpticalMode.single_photon(0.04)]
for mu in (0.0, 0.3, 0.9):
    f = FieldSpec(base + ([OpticalMode.poissonian(mu)] if mu else []))
    print(
        f"  mu = {mu:3.1f}: g^(2) = {g_theory(f, 2):.4f}, "
        f"theta(0,1) = {theta_theory(f, tree, (0, 1)):.6f}"
    )
