import json

import numpy as np
import pytest

from modetree import (
    BootstrapConfig,
    ClickTally,
    DetectorTree,
    DomainError,
    FieldSpec,
    OpticalMode,
    correlation_set_estimate,
    correlation_set_theory,
    simulate_pulses,
)
from modetree.io import (
    SCHEMA_VERSION,
    ScenarioConfig,
    correlation_set_from_dict,
    correlation_set_to_dict,
    load_scenario,
    read_tally,
    scenario_from_dict,
    scenario_to_dict,
    write_json,
    write_plot_data,
    write_tally,
)


def sample_scenario_dict():
    return {
        "schema_version": SCHEMA_VERSION,
        "name": "demo",
        "field": {
            "modes": [
                {"kind": "thermal", "mean": 0.4},
                {"kind": "poissonian", "mean": 0.6},
                {"kind": "single_photon", "mean": 0.02},
            ]
        },
        "tree": {
            "n_branches": 4,
            "split": [0.25, 0.25, 0.25, 0.25],
            "eff": [0.52, 0.66, 0.58, 0.61],
        },
        "n_pulses": 1000,
        "seed": 7,
        "s_max": 4,
        "bootstrap": {"n_resamples": 50, "seed": 3},
        "presence_threshold": 0.001,
        "exact_s": 4,
    }


class TestScenarioConfig:
    def test_round_trip(self):
        cfg = scenario_from_dict(sample_scenario_dict())
        assert cfg.name == "demo"
        assert cfg.n_pulses == 1000
        assert cfg.exact_s == 4
        assert len(cfg.field.modes) == 3
        again = scenario_from_dict(scenario_to_dict(cfg))
        assert scenario_to_dict(again) == scenario_to_dict(cfg)

    def test_defaults_filled(self):
        cfg = scenario_from_dict(
            {
                "field": {"modes": [{"kind": "thermal", "mean": 0.5}]},
                "tree": {"n_branches": 2, "eff": 0.8},
            }
        )
        assert cfg.n_pulses == 0
        assert cfg.s_max == 2
        np.testing.assert_allclose(cfg.tree.split, 0.5)
        assert cfg.exact_s is None

    def test_missing_sections(self):
        with pytest.raises(DomainError):
            scenario_from_dict({"tree": {"n_branches": 2}})
        with pytest.raises(DomainError):
            scenario_from_dict({"field": {"modes": []}})

    def test_bad_schema_version(self):
        d = sample_scenario_dict()
        d["schema_version"] = 99
        with pytest.raises(DomainError):
            scenario_from_dict(d)

    def test_bad_mode_kind(self):
        d = sample_scenario_dict()
        d["field"]["modes"][0]["kind"] = "squeezed"
        with pytest.raises(DomainError):
            scenario_from_dict(d)

    def test_split_must_sum_to_one(self):
        d = sample_scenario_dict()
        d["tree"]["split"] = [0.4, 0.3, 0.1, 0.1]
        with pytest.raises(DomainError):
            scenario_from_dict(d)

    def test_two_poissonians_rejected(self):
        d = sample_scenario_dict()
        d["field"]["modes"].append({"kind": "poissonian", "mean": 0.1})
        with pytest.raises(DomainError):
            scenario_from_dict(d)

    def test_s_max_exceeding_tree_rejected(self):
        d = sample_scenario_dict()
        d["s_max"] = 5
        with pytest.raises(DomainError):
            scenario_from_dict(d)

    def test_exact_s_out_of_range(self):
        d = sample_scenario_dict()
        d["exact_s"] = 5
        with pytest.raises(DomainError):
            scenario_from_dict(d)

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(sample_scenario_dict()))
        cfg = load_scenario(p)
        assert isinstance(cfg, ScenarioConfig)
        assert cfg.seed == 7


class TestTallyFile:
    def test_round_trip_bit_identical(self, tmp_path):
        f = FieldSpec([OpticalMode.thermal(0.5)])
        tree = DetectorTree.equal_split(3, 0.7)
        tally = simulate_pulses(f, tree, 50_000, seed=4)
        p = tmp_path / "tally.csv"
        write_tally(tally, p)
        back = read_tally(p)
        assert back.n_branches == tally.n_branches
        assert back.n_pulses == tally.n_pulses
        np.testing.assert_array_equal(back.counts, tally.counts)
        # writing the read-back tally reproduces the file byte for byte
        p2 = tmp_path / "tally2.csv"
        write_tally(back, p2)
        assert p.read_bytes() == p2.read_bytes()

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("branches,2\nn_pulses,3\npattern,count\n0,3\n")
        with pytest.raises(DomainError):
            read_tally(p)

    def test_malformed_row(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("n_branches,2\nn_pulses,3\npattern,count\n0,x\n")
        with pytest.raises(DomainError):
            read_tally(p)

    def test_inconsistent_counts(self, tmp_path):
        p = tmp_path / "bad.csv"
        write_tally(ClickTally(2, 3, np.array([1, 1, 1, 0])), p)
        text = p.read_text().replace("n_pulses,3", "n_pulses,9")
        p.write_text(text)
        with pytest.raises(DomainError):
            read_tally(p)


class TestCorrelationSetDocument:
    def test_theory_round_trip(self):
        f = FieldSpec([OpticalMode.thermal(0.5), OpticalMode.poissonian(0.3)])
        tree = DetectorTree.equal_split(4, 0.6)
        cs = correlation_set_theory(f, tree, 4)
        back = correlation_set_from_dict(correlation_set_to_dict(cs))
        assert back.g == cs.g
        assert back.theta == cs.theta
        assert back.n_pulses == 0
        np.testing.assert_array_equal(back.q_noclick, cs.q_noclick)

    def test_estimated_round_trip_keeps_pulses(self):
        f = FieldSpec([OpticalMode.thermal(0.5)])
        tree = DetectorTree.equal_split(2, 0.9)
        tally = simulate_pulses(f, tree, 20_000, seed=1)
        cs = correlation_set_estimate(tally, BootstrapConfig(20, 2))
        back = correlation_set_from_dict(correlation_set_to_dict(cs))
        assert back.n_pulses == 20_000
        assert back.g[2] == cs.g[2]
        assert set(back.theta) == set(cs.theta)

    def test_malformed_document(self):
        with pytest.raises(DomainError):
            correlation_set_from_dict({"n_branches": 2})
        with pytest.raises(DomainError):
            correlation_set_from_dict({"schema_version": 5})


class TestPlotData:
    def test_zero_padding(self, tmp_path):
        p = tmp_path / "plot.csv"
        write_plot_data(p, [0.5, 0.2], [0.49], kinds=["nu1"])
        rows = p.read_text().strip().splitlines()
        assert rows[0] == "mode_index,kind,expected_mean,reconstructed_mean"
        assert rows[1].startswith("0,nu1,0.5,0.49")
        assert rows[2].startswith("1,,0.2,0.0")


class TestWriteJson:
    def test_numpy_scalars_serialized(self, tmp_path):
        doc = {
            "a": np.float64(0.5),
            "b": np.int64(3),
            "c": np.bool_(True),
            "d": np.array([1.0, 2.0]),
        }
        p = tmp_path / "doc.json"
        write_json(doc, p)
        back = json.loads(p.read_text())
        assert back == {"a": 0.5, "b": 3, "c": True, "d": [1.0, 2.0]}
