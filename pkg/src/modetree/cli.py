"""Command-line front end: simulate -> estimate -> reconstruct pipelines.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 internal
numerical failure (every candidate fit failed).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import AllFitsFailedError, ModetreeError
from .estimators import BootstrapConfig, correlation_set_estimate
from .io import (
    ScenarioConfig,
    correlation_set_from_dict,
    load_scenario,
    read_tally,
    result_to_dict,
    scenario_from_dict,
    write_json,
    write_plot_data,
    write_tally,
)
from .reconstruct import OptConfig, canonical_mean_vector, reconstruct
from .simulator import exact_click_distribution, simulate_pulses

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    updates = {}
    if getattr(args, "pulses", None) is not None:
        updates["n_pulses"] = args.pulses
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "s_max", None) is not None:
        updates["s_max"] = args.s_max
    if getattr(args, "presence_threshold", None) is not None:
        updates["presence_threshold"] = args.presence_threshold
    if getattr(args, "bootstrap_resamples", None) is not None:
        updates["bootstrap"] = BootstrapConfig(
            n_resamples=args.bootstrap_resamples, seed=cfg.bootstrap.seed
        )
    if getattr(args, "exact_s", None) is not None:
        updates["exact_s"] = args.exact_s
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _opt_config(objective: str, seed: int) -> OptConfig:
    return OptConfig(include_theta=(objective == "g-theta"), seed=seed)


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(load_scenario(args.config), args)
    tally = simulate_pulses(
        cfg.field, cfg.tree, cfg.n_pulses, cfg.seed, n_workers=args.workers
    )
    write_tally(tally, args.out)
    print(f"wrote {cfg.n_pulses} pulses -> {args.out}")
    if args.exact_out is not None:
        dist = exact_click_distribution(cfg.field, cfg.tree, args.n_max)
        with open(args.exact_out, "w") as fh:
            fh.write("pattern,probability\n")
            for pattern, p in enumerate(dist.probs):
                fh.write(f"{pattern},{float(p)!r}\n")
        print(
            f"wrote exact pattern distribution (truncation deficit "
            f"{dist.truncation_deficit:.3e}) -> {args.exact_out}"
        )
    return EXIT_OK


def _reconstruct_one(cfg: ScenarioConfig, observed, objective: str):
    truth = None
    if cfg.field.modes:
        truth = canonical_mean_vector(cfg.field)
    result = reconstruct(
        observed,
        cfg.tree,
        cfg.s_max,
        truth=truth,
        exact_s=cfg.exact_s,
        opt_config=_opt_config(objective, cfg.seed),
        presence_threshold=cfg.presence_threshold,
    )
    return result, truth


def _report(result, observed, objective) -> str:
    lines = [
        f"objective: {objective}",
        f"observed g^(2)(0) = {observed.g[2][0]:.4f} +- {observed.g[2][1]:.4f}"
        if 2 in observed.g
        else "",
        f"best family: {result.best.family.describe()} "
        f"(LS = {result.best.ls_value:.4e}, lambda_theta = "
        f"{result.best.lambda_theta:.4g}, converged = {result.best.converged})",
        "reconstructed modes after pruning: "
        + (
            f"{result.pruned_family.describe()} with means "
            + ", ".join(f"{x:.5f}" for x in result.pruned_params)
            if result.pruned_family
            else "(none)"
        ),
        f"S_rec = {result.s_rec}",
    ]
    if result.fidelity is not None:
        lines.append(f"fidelity vs ground truth: {result.fidelity:.4f}")
    return "\n".join(line for line in lines if line)


def cmd_reconstruct(args) -> int:
    cfg = _apply_overrides(load_scenario(args.config), args)
    if (args.tally is None) == (args.correlations is None):
        raise ModetreeError("provide exactly one of --tally / --correlations")
    if args.tally is not None:
        tally = read_tally(args.tally)
        observed = correlation_set_estimate(tally, cfg.bootstrap)
    else:
        with open(args.correlations) as fh:
            observed = correlation_set_from_dict(json.load(fh))
    result, truth = _reconstruct_one(cfg, observed, args.objective)

    write_json(result_to_dict(result, cfg, observed, args.objective), args.out)
    if args.plot_data is not None:
        kinds = (
            result.pruned_family.param_labels() if result.pruned_family else []
        )
        write_plot_data(
            args.plot_data,
            truth if truth is not None else [],
            result.pruned_params,
            kinds,
        )
    print(_report(result, observed, args.objective))
    print(f"wrote result -> {args.out}")
    return EXIT_OK


def cmd_suite(args) -> int:
    with open(args.config) as fh:
        doc = json.load(fh)
    if doc.get("schema_version", 1) != 1:
        raise ModetreeError(
            f"unsupported schema_version {doc.get('schema_version')!r}"
        )
    defaults = doc.get("defaults", {})
    scenarios = doc.get("scenarios", [])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for i, override in enumerate(scenarios):
        name = str(override.get("name", f"case{i + 1}"))
        row = {"case": name}
        try:
            merged = {**defaults, **override}
            cfg = scenario_from_dict(merged, name=name)
            cfg = _apply_overrides(cfg, args)
            case_dir = out_dir / name
            case_dir.mkdir(exist_ok=True)
            tally = simulate_pulses(
                cfg.field, cfg.tree, cfg.n_pulses, cfg.seed,
                n_workers=args.workers,
            )
            write_tally(tally, case_dir / "tally.csv")
            observed = correlation_set_estimate(tally, cfg.bootstrap)
            row["s_e"] = len(cfg.field.modes)
            row["configuration"] = _describe_field(cfg.field)
            row["g2_exp"] = observed.g[2][0]
            row["g2_unc"] = observed.g[2][1]
            for objective, tag in (("g-theta", "g_theta"), ("g-only", "g")):
                result, truth = _reconstruct_one(cfg, observed, objective)
                write_json(
                    result_to_dict(result, cfg, observed, objective),
                    case_dir / f"result_{tag}.json",
                )
                kinds = (
                    result.pruned_family.param_labels()
                    if result.pruned_family
                    else []
                )
                write_plot_data(
                    case_dir / f"plot_{tag}.csv",
                    truth if truth is not None else [],
                    result.pruned_params,
                    kinds,
                )
                row[f"f_{tag}"] = (
                    "" if result.fidelity is None else f"{result.fidelity:.4f}"
                )
                row[f"s_rec_{tag}"] = result.s_rec
                row[f"rec_{tag}"] = (
                    result.pruned_family.describe()
                    if result.pruned_family
                    else ""
                )
            row["error"] = ""
        except (ModetreeError, OSError) as exc:
            row["error"] = str(exc)
        rows.append(row)

    rows.sort(key=lambda r: r["case"])
    columns = [
        "case", "s_e", "configuration",
        "f_g_theta", "s_rec_g_theta", "rec_g_theta",
        "f_g", "s_rec_g", "rec_g",
        "g2_exp", "g2_unc", "error",
    ]
    summary = out_dir / "summary.csv"
    with open(summary, "w", newline="") as fh:
        import csv as _csv

        w = _csv.DictWriter(fh, fieldnames=columns, restval="")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} summary rows -> {summary}")
    return EXIT_OK


def _describe_field(field) -> str:
    from .modes import ModeKind

    n_sps = sum(1 for m in field.modes if m.kind is ModeKind.SINGLE_PHOTON)
    n_th = sum(1 for m in field.modes if m.kind is ModeKind.THERMAL)
    n_poi = sum(1 for m in field.modes if m.kind is ModeKind.POISSONIAN)
    parts = []
    if n_sps:
        parts.append(f"{n_sps} SPS")
    if n_th:
        parts.append(f"{n_th} Th")
    if n_poi:
        parts.append(f"{n_poi} Poi")
    return ", ".join(parts) or "vacuum"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modetree",
        description="Detector-tree photon statistics: simulate, estimate, "
        "and reconstruct multimode optical fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument(
        "--pulses", type=int, help="override the configured pulse count"
    )

    sim = sub.add_parser(
        "simulate", parents=[common], help="simulate pulses to a tally file"
    )
    sim.add_argument("--config", required=True, help="scenario config (JSON)")
    sim.add_argument("--out", required=True, help="output tally CSV path")
    sim.add_argument(
        "--workers", type=int, default=1,
        help="worker threads (does not affect results)",
    )
    sim.add_argument(
        "--exact-out",
        help="also write the exact click-pattern distribution (CSV)",
    )
    sim.add_argument(
        "--n-max", type=int, default=None,
        help="photon-number truncation for the exact distribution",
    )
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser(
        "reconstruct", parents=[common],
        help="reconstruct the mode structure from a tally or correlation set",
    )
    rec.add_argument("--config", required=True, help="scenario config (JSON)")
    rec.add_argument("--tally", help="input tally CSV")
    rec.add_argument("--correlations", help="input correlation-set JSON")
    rec.add_argument("--out", required=True, help="output result JSON path")
    rec.add_argument("--plot-data", help="per-mode plot-data CSV path")
    rec.add_argument("--s-max", type=int, help="override maximum mode count")
    rec.add_argument(
        "--exact-s", type=int, help="restrict candidates to exactly S modes"
    )
    rec.add_argument("--presence-threshold", type=float)
    rec.add_argument("--bootstrap-resamples", type=int)
    rec.add_argument(
        "--objective", choices=("g-theta", "g-only"), default="g-theta"
    )
    rec.set_defaults(func=cmd_reconstruct)

    suite = sub.add_parser(
        "suite", parents=[common],
        help="run a list of scenarios with both objectives",
    )
    suite.add_argument("--config", required=True, help="suite config (JSON)")
    suite.add_argument("--out", required=True, help="output directory")
    suite.add_argument("--workers", type=int, default=1)
    suite.add_argument("--s-max", type=int)
    suite.add_argument("--presence-threshold", type=float)
    suite.add_argument("--bootstrap-resamples", type=int)
    suite.set_defaults(func=cmd_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AllFitsFailedError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ModetreeError, json.JSONDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
