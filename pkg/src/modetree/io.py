"""File formats: scenario configs (JSON), click tallies (CSV),
correlation sets and reconstruction results (JSON), plot data (CSV).

Every structured document carries a schema_version field; tallies use a
bit-exact CSV with a two-line header followed by pattern,count rows.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .correlations import CorrelationSet, DetectorTree
from .errors import DomainError
from .estimators import BootstrapConfig
from .modes import FieldSpec, ModeKind, OpticalMode
from .reconstruct import FitResult, ModelFamily, ReconstructionResult
from .simulator import ClickTally

SCHEMA_VERSION = 1


@dataclass
class ScenarioConfig:
    """One simulate/estimate/reconstruct scenario."""

    field: FieldSpec
    tree: DetectorTree
    n_pulses: int
    seed: int
    s_max: int
    bootstrap: BootstrapConfig
    presence_threshold: float = 1e-3
    exact_s: int | None = None
    name: str = "scenario"

    def __post_init__(self):
        if self.s_max > self.tree.n_branches:
            raise DomainError(
                f"s_max={self.s_max} exceeds the tree's photon-number "
                f"resolution N={self.tree.n_branches}"
            )
        if self.n_pulses < 0:
            raise DomainError(f"n_pulses must be >= 0, got {self.n_pulses}")
        if self.exact_s is not None and not 1 <= self.exact_s <= self.s_max:
            raise DomainError(
                f"exact_s must lie in [1, s_max={self.s_max}], got {self.exact_s}"
            )


def _field_from_dict(d) -> FieldSpec:
    modes = []
    for m in d.get("modes", []):
        try:
            kind = ModeKind(m["kind"])
        except (KeyError, ValueError):
            raise DomainError(
                f"mode kind must be one of {[k.value for k in ModeKind]}, "
                f"got {m.get('kind')!r}"
            )
        if "mean" not in m:
            raise DomainError(f"mode entry missing 'mean': {m}")
        modes.append(OpticalMode(kind, float(m["mean"])))
    return FieldSpec(modes)


def _field_to_dict(field: FieldSpec) -> dict:
    return {
        "modes": [{"kind": m.kind.value, "mean": m.mean} for m in field.modes]
    }


def _tree_from_dict(d) -> DetectorTree:
    if "n_branches" not in d:
        raise DomainError("tree config missing 'n_branches'")
    n = int(d["n_branches"])
    eff = d.get("eff", 1.0)
    if "split" in d:
        return DetectorTree(n, np.asarray(d["split"], float),
                            np.broadcast_to(np.asarray(eff, float), (n,)).copy())
    return DetectorTree.equal_split(n, eff)


def _tree_to_dict(tree: DetectorTree) -> dict:
    return {
        "n_branches": tree.n_branches,
        "split": list(tree.split),
        "eff": list(tree.eff),
    }


def scenario_from_dict(d, name: str = "scenario") -> ScenarioConfig:
    if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise DomainError(
            f"unsupported schema_version {d.get('schema_version')!r}"
        )
    for key in ("field", "tree"):
        if key not in d:
            raise DomainError(f"scenario config missing '{key}'")
    boot = d.get("bootstrap", {})
    return ScenarioConfig(
        field=_field_from_dict(d["field"]),
        tree=_tree_from_dict(d["tree"]),
        n_pulses=int(d.get("n_pulses", 0)),
        seed=int(d.get("seed", 0)),
        s_max=int(d.get("s_max", d["tree"]["n_branches"])),
        bootstrap=BootstrapConfig(
            n_resamples=int(boot.get("n_resamples", 200)),
            seed=int(boot.get("seed", 0)),
        ),
        presence_threshold=float(d.get("presence_threshold", 1e-3)),
        exact_s=(None if d.get("exact_s") is None else int(d["exact_s"])),
        name=str(d.get("name", name)),
    )


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "field": _field_to_dict(cfg.field),
        "tree": _tree_to_dict(cfg.tree),
        "n_pulses": cfg.n_pulses,
        "seed": cfg.seed,
        "s_max": cfg.s_max,
        "bootstrap": {
            "n_resamples": cfg.bootstrap.n_resamples,
            "seed": cfg.bootstrap.seed,
        },
        "presence_threshold": cfg.presence_threshold,
        "exact_s": cfg.exact_s,
    }


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def write_tally(tally: ClickTally, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_branches", tally.n_branches])
        w.writerow(["n_pulses", tally.n_pulses])
        w.writerow(["pattern", "count"])
        for pattern, count in enumerate(tally.counts):
            w.writerow([pattern, int(count)])


def read_tally(path) -> ClickTally:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    try:
        assert rows[0][0] == "n_branches" and rows[1][0] == "n_pulses"
        n_branches = int(rows[0][1])
        n_pulses = int(rows[1][1])
        assert rows[2] == ["pattern", "count"]
        counts = np.zeros(1 << n_branches, dtype=np.int64)
        for pattern, count in rows[3:]:
            counts[int(pattern)] = int(count)
    except (AssertionError, IndexError, ValueError) as exc:
        raise DomainError(f"malformed tally file {path}: {exc}") from exc
    return ClickTally(n_branches, n_pulses, counts)


def correlation_set_to_dict(cs: CorrelationSet) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n_branches": cs.n_branches,
        "n_pulses": cs.n_pulses,
        "g": {str(K): list(v) for K, v in cs.g.items()},
        "theta": {
            ",".join(map(str, s)): list(v) for s, v in cs.theta.items()
        },
        "q_click": list(cs.q_click),
        "q_noclick": list(cs.q_noclick),
        "q_noclick_all": cs.q_noclick_all,
    }


def correlation_set_from_dict(d) -> CorrelationSet:
    if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise DomainError(
            f"unsupported schema_version {d.get('schema_version')!r}"
        )
    try:
        return CorrelationSet(
            n_branches=int(d["n_branches"]),
            g={int(K): tuple(v) for K, v in d["g"].items()},
            theta={
                tuple(int(i) for i in s.split(",")): tuple(v)
                for s, v in d["theta"].items()
            },
            q_click=np.asarray(d["q_click"], float),
            q_noclick=np.asarray(d["q_noclick"], float),
            q_noclick_all=float(d["q_noclick_all"]),
            n_pulses=int(d.get("n_pulses", 0)),
        )
    except (KeyError, ValueError) as exc:
        raise DomainError(f"malformed correlation-set document: {exc}") from exc


def _family_to_dict(fam: ModelFamily) -> dict:
    return {"n_poi": fam.n_poi, "n_th": fam.n_th, "n_sps": fam.n_sps}


def _fit_to_dict(fit: FitResult) -> dict:
    return {
        "family": _family_to_dict(fit.family),
        "configuration": fit.family.describe(),
        "params": dict(zip(fit.family.param_labels(), map(float, fit.params))),
        "ls_value": fit.ls_value,
        "lambda_theta": fit.lambda_theta,
        "converged": fit.converged,
        "n_restarts_used": fit.n_restarts_used,
    }


def result_to_dict(
    result: ReconstructionResult,
    cfg: ScenarioConfig,
    observed: CorrelationSet,
    objective: str,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "objective": objective,
        "config": scenario_to_dict(cfg),
        "observed": correlation_set_to_dict(observed),
        "best": _fit_to_dict(result.best),
        "ranked": [_fit_to_dict(f) for f in result.ranked],
        "pruned": {
            "family": (
                _family_to_dict(result.pruned_family)
                if result.pruned_family
                else None
            ),
            "configuration": (
                result.pruned_family.describe() if result.pruned_family else ""
            ),
            "params": [float(x) for x in result.pruned_params],
            "s_rec": result.s_rec,
        },
        "fidelity": result.fidelity,
    }


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {obj!r}")


def write_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_json_default)
        fh.write("\n")


def write_plot_data(path, expected, reconstructed, kinds=None) -> None:
    """Per-mode expected vs reconstructed mean photon numbers (CSV)."""
    expected = list(expected)
    reconstructed = list(reconstructed)
    n = max(len(expected), len(reconstructed))
    expected += [0.0] * (n - len(expected))
    reconstructed += [0.0] * (n - len(reconstructed))
    kinds = list(kinds) if kinds is not None else [""] * n
    kinds += [""] * (n - len(kinds))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode_index", "kind", "expected_mean", "reconstructed_mean"])
        for i in range(n):
            w.writerow([i, kinds[i], expected[i], reconstructed[i]])
