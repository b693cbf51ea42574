import numpy as np
import pytest

from modetree import (
    BootstrapConfig,
    ClickTally,
    DetectorTree,
    DomainError,
    EmptyTallyError,
    FieldSpec,
    OpticalMode,
    ZeroSinglesError,
    correlation_set_estimate,
    estimate_g,
    estimate_q,
    estimate_theta,
    exact_click_distribution,
    simulate_pulses,
)
from modetree.estimators import g_from_pattern_probs, theta_from_pattern_probs


@pytest.fixture
def small_tally():
    # N=2: 5 no-click, 2 only-detector-0, 2 only-detector-1, 1 both
    return ClickTally(2, 10, np.array([5, 2, 2, 1]))


class TestEstimateQ:
    def test_direct_counting(self, small_tally):
        q_click, q_noclick, sub_noclick, sub_allclick = estimate_q(small_tally)
        np.testing.assert_allclose(q_click, [0.3, 0.3])
        np.testing.assert_allclose(q_click + q_noclick, 1.0)
        assert sub_noclick[(0, 1)] == pytest.approx(0.5)
        assert sub_allclick[(0, 1)] == pytest.approx(0.1)

    def test_all_vacuum(self):
        tally = ClickTally(2, 7, np.array([7, 0, 0, 0]))
        q_click, q_noclick, *_ = estimate_q(tally)
        np.testing.assert_allclose(q_click, 0.0)
        np.testing.assert_allclose(q_noclick, 1.0)

    def test_empty_tally(self):
        with pytest.raises(EmptyTallyError):
            estimate_q(ClickTally(2, 0, np.zeros(4, dtype=int)))

    def test_simulated_thermal_noclick(self):
        f = FieldSpec([OpticalMode.thermal(1.0)])
        tree = DetectorTree.equal_split(2, 1.0)
        n = 1_000_000
        tally = simulate_pulses(f, tree, n, seed=2)
        *_, sub_noclick, _ = estimate_q(tally)
        sigma = np.sqrt(0.25 / n)
        assert abs(sub_noclick[(0, 1)] - 0.5) < 5 * sigma


class TestEstimateG:
    def test_direct_formula(self, small_tally):
        value, sd = estimate_g(small_tally, 2, BootstrapConfig(50, 1))
        assert value == pytest.approx(0.1 / 0.09)
        assert sd > 0

    def test_zero_singles(self):
        tally = ClickTally(2, 5, np.array([3, 2, 0, 0]))
        with pytest.raises(ZeroSinglesError):
            estimate_g(tally, 2)

    def test_k_range_checked(self, small_tally):
        with pytest.raises(DomainError):
            estimate_g(small_tally, 3)

    def test_three_emitters_estimate(self):
        f = FieldSpec([OpticalMode.single_photon(0.1)] * 3)
        tree = DetectorTree.equal_split(4, 0.6)
        tally = simulate_pulses(f, tree, 2_000_000, seed=6)
        value, sd = estimate_g(tally, 2, BootstrapConfig(100, 2))
        # compare against the click-based value at this flux, not g_theory
        dist = exact_click_distribution(f, tree)
        expected = g_from_pattern_probs(dist.probs, 4, 2)
        assert abs(value - expected) < 3 * sd

    def test_poissonian_g3_near_one(self):
        f = FieldSpec([OpticalMode.poissonian(0.05)])
        tree = DetectorTree.equal_split(4, 0.6)
        tally = simulate_pulses(f, tree, 2_000_000, seed=8)
        value, sd = estimate_g(tally, 3, BootstrapConfig(100, 3))
        assert abs(value - 1.0) < 4 * sd


class TestEstimateTheta:
    def test_direct_formula(self, small_tally):
        value, sd = estimate_theta(small_tally, (0, 1), BootstrapConfig(50, 4))
        assert value == pytest.approx(0.5 / 0.49)
        assert sd > 0

    def test_poissonian_cancellation(self):
        f = FieldSpec([OpticalMode.poissonian(1.0)])
        tree = DetectorTree.equal_split(4, 0.5)
        tally = simulate_pulses(f, tree, 1_000_000, seed=12)
        value, sd = estimate_theta(tally, (1, 3), BootstrapConfig(100, 5))
        assert abs(value - 1.0) < 3 * sd

    def test_thermal_pair(self):
        f = FieldSpec([OpticalMode.thermal(1.0)])
        tree = DetectorTree.equal_split(2, 1.0)
        tally = simulate_pulses(f, tree, 1_000_000, seed=13)
        value, sd = estimate_theta(tally, (0, 1), BootstrapConfig(100, 6))
        assert abs(value - 1.125) < 3 * sd


class TestCorrelationSetEstimate:
    def test_empty_tally(self):
        with pytest.raises(EmptyTallyError):
            correlation_set_estimate(ClickTally(2, 0, np.zeros(4, dtype=int)))

    def test_vacuum_tally_zero_singles(self):
        tally = ClickTally(2, 5, np.array([5, 0, 0, 0]))
        with pytest.raises(ZeroSinglesError):
            correlation_set_estimate(tally)

    def test_mixed_field_g2_matches_click_oracle(self):
        f = FieldSpec(
            [
                OpticalMode.single_photon(0.02),
                OpticalMode.thermal(0.2),
                OpticalMode.poissonian(0.6),
            ]
        )
        tree = DetectorTree.equal_split(4, 0.6)
        tally = simulate_pulses(f, tree, 2_000_000, seed=21)
        cs = correlation_set_estimate(tally, BootstrapConfig(100, 7))
        dist = exact_click_distribution(f, tree)
        expected = g_from_pattern_probs(dist.probs, 4, 2)
        value, sd = cs.g[2]
        assert abs(value - expected) < 3 * sd
        assert cs.n_pulses == 2_000_000

    def test_consistency_on_exact_distribution(self):
        # feeding the exact pattern distribution through the estimator
        # formulas reproduces click-based theory values
        f = FieldSpec([OpticalMode.thermal(0.5), OpticalMode.single_photon(0.3)])
        tree = DetectorTree(4, [0.3, 0.25, 0.25, 0.2], [0.9, 0.6, 0.7, 0.8])
        dist = exact_click_distribution(f, tree)
        from modetree import q_noclick_subset, theta_theory

        for subset in ((0, 1), (1, 2, 3), (0, 1, 2, 3)):
            got = theta_from_pattern_probs(dist.probs, 4, subset)
            assert got == pytest.approx(
                theta_theory(f, tree, subset), abs=1e-10
            )
        patterns = np.arange(16)
        for i in range(4):
            marginal = dist.probs[(patterns >> i & 1) == 0].sum()
            assert marginal == pytest.approx(
                q_noclick_subset(f, tree, (i,)), abs=1e-10
            )

    def test_bootstrap_coverage(self):
        # ±2 sigma bootstrap interval should cover the click-based truth in
        # roughly 95 of 100 independent simulations (sanity band 85-99)
        f = FieldSpec([OpticalMode.thermal(0.4), OpticalMode.poissonian(0.3)])
        tree = DetectorTree.equal_split(2, 0.7)
        dist = exact_click_distribution(f, tree)
        expected = g_from_pattern_probs(dist.probs, 2, 2)
        n = 100_000
        hits = 0
        for i in range(100):
            tally = simulate_pulses(f, tree, n, seed=1000 + i)
            value, sd = estimate_g(tally, 2, BootstrapConfig(120, i))
            hits += abs(value - expected) <= 2 * sd
        assert 85 <= hits <= 99

    def test_low_flux_bias_below_sigma(self):
        f = FieldSpec([OpticalMode.poissonian(0.05), OpticalMode.thermal(0.05)])
        tree = DetectorTree.equal_split(4, 0.6)
        tally = simulate_pulses(f, tree, 10_000_000, seed=77)
        value, sd = estimate_g(tally, 2, BootstrapConfig(100, 9))
        dist = exact_click_distribution(f, tree)
        expected = g_from_pattern_probs(dist.probs, 4, 2)
        assert abs(value - expected) < sd
