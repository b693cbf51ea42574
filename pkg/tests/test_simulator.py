import numpy as np
import pytest

from modetree import (
    ClickTally,
    DetectorTree,
    DomainError,
    FieldSpec,
    OpticalMode,
    exact_click_distribution,
    q_noclick_subset,
    simulate_pulses,
)


def random_scenario(rng):
    modes = []
    if rng.random() < 0.5:
        modes.append(OpticalMode.poissonian(rng.uniform(0.05, 1.2)))
    for _ in range(rng.integers(0, 3)):
        modes.append(OpticalMode.thermal(rng.uniform(0.05, 0.8)))
    for _ in range(rng.integers(0, 3)):
        modes.append(OpticalMode.single_photon(rng.uniform(0.05, 0.9)))
    if not modes:
        modes.append(OpticalMode.thermal(0.4))
    field = FieldSpec(modes)
    n = int(rng.integers(2, 5))
    tree = DetectorTree(n, rng.dirichlet(np.ones(n) * 8), rng.uniform(0.3, 1.0, n))
    return field, tree


class TestClickTally:
    def test_counts_length_checked(self):
        with pytest.raises(DomainError):
            ClickTally(2, 3, np.array([1, 2, 0]))

    def test_counts_sum_checked(self):
        with pytest.raises(DomainError):
            ClickTally(2, 5, np.array([1, 1, 1, 1]))

    def test_merge(self):
        a = ClickTally(2, 3, np.array([1, 1, 1, 0]))
        b = ClickTally(2, 2, np.array([2, 0, 0, 0]))
        merged = a + b
        assert merged.n_pulses == 5
        np.testing.assert_array_equal(merged.counts, [3, 1, 1, 0])


class TestSimulatePulses:
    def test_vacuum(self):
        tree = DetectorTree.equal_split(3, 0.8)
        tally = simulate_pulses(FieldSpec(), tree, 1000, seed=1)
        assert tally.counts[0] == 1000
        assert tally.counts[1:].sum() == 0

    def test_zero_pulses(self):
        tree = DetectorTree.equal_split(2, 1.0)
        tally = simulate_pulses(FieldSpec([OpticalMode.thermal(1)]), tree, 0, seed=0)
        assert tally.n_pulses == 0
        assert tally.counts.sum() == 0

    def test_single_photon_never_double_clicks(self):
        f = FieldSpec([OpticalMode.single_photon(1.0)])
        tree = DetectorTree.equal_split(2, 1.0)
        tally = simulate_pulses(f, tree, 1_000_000, seed=3)
        assert tally.counts[0b11] == 0
        assert tally.counts[0] == 0
        # each branch count within 5 sigma of binomial(n, 1/2)
        sigma = np.sqrt(1_000_000 * 0.25)
        for pattern in (0b01, 0b10):
            assert abs(tally.counts[pattern] - 500_000) < 5 * sigma

    def test_thermal_noclick_rate(self):
        f = FieldSpec([OpticalMode.thermal(1.0)])
        tree = DetectorTree.equal_split(2, 1.0)
        n = 1_000_000
        tally = simulate_pulses(f, tree, n, seed=5)
        sigma = np.sqrt(n * 0.5 * 0.5)
        assert abs(tally.counts[0] - 0.5 * n) < 5 * sigma

    def test_seed_determinism_and_worker_independence(self):
        rng = np.random.default_rng(17)
        field, tree = random_scenario(rng)
        a = simulate_pulses(field, tree, 200_000, seed=9, n_workers=1)
        b = simulate_pulses(field, tree, 200_000, seed=9, n_workers=4)
        c = simulate_pulses(field, tree, 200_000, seed=9, n_workers=1)
        np.testing.assert_array_equal(a.counts, b.counts)
        np.testing.assert_array_equal(a.counts, c.counts)
        d = simulate_pulses(field, tree, 200_000, seed=10)
        assert not np.array_equal(a.counts, d.counts)

    def test_matches_oracle_on_random_scenarios(self):
        rng = np.random.default_rng(29)
        n = 200_000
        for _ in range(4):
            field, tree = random_scenario(rng)
            tally = simulate_pulses(field, tree, n, seed=int(rng.integers(1 << 30)))
            dist = exact_click_distribution(field, tree)
            sigma = np.sqrt(n * dist.probs * (1 - dist.probs))
            diff = np.abs(tally.counts - n * dist.probs)
            assert np.all(diff <= 5 * np.maximum(sigma, 1.0))


class TestExactClickDistribution:
    def test_vacuum(self):
        tree = DetectorTree.equal_split(4, 0.5)
        dist = exact_click_distribution(FieldSpec(), tree)
        assert dist.probs[0] == pytest.approx(1.0)
        assert dist.probs[1:].sum() == pytest.approx(0.0, abs=1e-15)

    def test_half_photon_hand_enumeration(self):
        f = FieldSpec([OpticalMode.single_photon(0.5)])
        tree = DetectorTree.equal_split(2, 1.0)
        dist = exact_click_distribution(f, tree, n_max=1)
        np.testing.assert_allclose(dist.probs, [0.5, 0.25, 0.25, 0.0], atol=1e-14)

    def test_poissonian_noclick(self):
        f = FieldSpec([OpticalMode.poissonian(1.0)])
        tree = DetectorTree.equal_split(2, 0.5)
        dist = exact_click_distribution(f, tree, n_max=60)
        assert dist.probs[0] == pytest.approx(np.exp(-0.5), rel=1e-12)

    def test_marginals_match_generating_function(self):
        rng = np.random.default_rng(41)
        for _ in range(5):
            field, tree = random_scenario(rng)
            dist = exact_click_distribution(field, tree)
            patterns = np.arange(len(dist.probs))
            for subset in ((0,), (0, 1), tuple(range(tree.n_branches))):
                mask = sum(1 << i for i in subset)
                marginal = dist.probs[(patterns & mask) == 0].sum()
                assert marginal == pytest.approx(
                    q_noclick_subset(field, tree, subset), abs=1e-10
                )

    def test_probs_sum_within_deficit(self):
        f = FieldSpec([OpticalMode.thermal(0.8), OpticalMode.poissonian(0.5)])
        tree = DetectorTree.equal_split(4, 0.6)
        dist = exact_click_distribution(f, tree)
        assert np.all(dist.probs >= 0)
        total = dist.probs.sum()
        assert 1 - dist.truncation_deficit - 1e-12 <= total <= 1 + 1e-12
