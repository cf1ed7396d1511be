"""Command-line front end: scenario runs, relation checks, sweeps, transport.

Exit codes: 0 all-pass, 2 unknown name or malformed input, 3 numerical
failure or expectation mismatch, 4 unwritable output path.  All reports are
JSON (stdout or --out) with a top-level schema key; human-readable tables go
to stderr so piped output stays machine-clean.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from .distributions import w2_lp_oracle, w2_quantile
from .relations import qubit_error_bound
from .scenarios import (
    EX,
    EY,
    EZ,
    RunConfig,
    SCENARIOS,
    ScenarioOutcome,
    epsno_sum_suite,
    eps_form_equivalence_suite,
    naive_falsification_cases,
    ozawa_branciard_suite,
    run_scenario,
    scenario_names,
    unbiased_model_suite,
)
from .serialize import (
    SCHEMA,
    dumps_json,
    encode_float,
    read_distribution_csv,
    verdict_to_json,
    write_coupling_csv,
)

EXIT_OK = 0
EXIT_UNKNOWN = 2
EXIT_NUMERIC = 3
EXIT_UNWRITABLE = 4

SWEEP_RELATIONS = ("qubit-error-bound", "naive-product", "branciard")
CHECK_RELATIONS = (
    "ozawa",
    "branciard",
    "naive-product",
    "unbiased",
    "qubit-error-sum",
    "qubit-error-bound",
    "phase-space",
    "eps-forms",
)


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        seed=args.seed,
        grid_n=args.grid_n,
        grid_l=args.grid_L,
        budget=args.budget,
        hbar_scale=args.hbar_scale,
    )


def _config_to_json(config: RunConfig) -> dict:
    return {
        "seed": config.seed,
        "grid_n": config.grid_n,
        "grid_L": config.grid_l,
        "budget": config.budget,
        "hbar_scale": config.hbar_scale,
    }


def _emit(payload: dict, args) -> int:
    text = dumps_json(payload)
    if args.out:
        try:
            with open(args.out, "w") as handle:
                handle.write(text)
        except OSError as exc:
            print(f"cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_UNWRITABLE
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _outcome_to_json(outcome: ScenarioOutcome) -> dict:
    out = {
        "name": outcome.name,
        "parameters": _encode_tree(outcome.parameters),
        "values": {k: encode_float(float(v)) for k, v in outcome.values.items()},
        "checks": _encode_tree(outcome.checks),
        "verdicts": [verdict_to_json(v) for v in outcome.verdicts],
        "expected_violations": sorted(outcome.expect_violation),
        "passed": bool(outcome.passed),
    }
    if outcome.report is not None:
        out["report"] = outcome.report
    return out


def _print_outcome_table(outcome: ScenarioOutcome):
    lines = [f"scenario {outcome.name}: {'PASS' if outcome.passed else 'FAIL'}"]
    for check in outcome.checks:
        mark = "ok " if check["pass"] else "BAD"
        lines.append(
            f"  [{mark}] {check['name']:32s} computed={check['computed']:.12g} "
            f"{check['mode']} {check['expected']:.12g} tol={check['tolerance']:g} "
            f"({check['provenance']})"
        )
    for v in outcome.verdicts:
        expected_violation = v.relation in outcome.expect_violation
        ok = v.holds != expected_violation
        tag = "violated (as required)" if expected_violation and not v.holds else (
            "holds" if v.holds else "VIOLATED"
        )
        lines.append(
            f"  [{'ok ' if ok else 'BAD'}] relation {v.relation:28s} "
            f"lhs={v.lhs:.9g} rhs={v.rhs:.9g} {tag}"
        )
    print("\n".join(lines), file=sys.stderr)


def _parse_overrides(pairs) -> dict:
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ValueError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def cmd_scenario(args) -> int:
    config = _config_from_args(args)
    if args.action == "list":
        payload = {
            "schema": SCHEMA,
            "scenarios": [
                {
                    "name": s.name,
                    "kind": s.kind,
                    "description": s.description,
                    "parameters": s.parameters,
                }
                for s in (SCENARIOS[n] for n in scenario_names())
            ],
        }
        return _emit(payload, args)
    # run
    if args.all:
        names = scenario_names()
    elif args.name:
        if args.name not in SCENARIOS:
            print(f"unknown scenario {args.name!r}", file=sys.stderr)
            return EXIT_UNKNOWN
        names = [args.name]
    else:
        print("scenario run needs a NAME or --all", file=sys.stderr)
        return EXIT_UNKNOWN
    try:
        overrides = _parse_overrides(args.set)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNKNOWN
    outcomes = []
    for name in names:
        try:
            outcome = run_scenario(name, config, overrides or None)
        except KeyError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_UNKNOWN
        except (ValueError, ArithmeticError) as exc:
            print(f"numerical failure in {name}: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        outcomes.append(outcome)
        _print_outcome_table(outcome)
    payload = {
        "schema": SCHEMA,
        "config": _config_to_json(config),
        "scenarios": [_outcome_to_json(o) for o in outcomes],
        "passed": all(o.passed for o in outcomes),
    }
    code = _emit(payload, args)
    if code != EXIT_OK:
        return code
    return EXIT_OK if payload["passed"] else EXIT_NUMERIC


def _sweep_rows(relation: str, points: int, config: RunConfig) -> list[dict]:
    rows = []
    if relation == "qubit-error-bound":
        for theta in np.linspace(0.0, math.pi / 2, points):
            b = math.cos(theta) * EZ + math.sin(theta) * EX
            bound, achieved, _ = qubit_error_bound(EZ, b, grid_points=21)
            rows.append(
                {"theta": theta, "lhs": achieved, "rhs": bound, "slack": achieved - bound}
            )
    elif relation == "naive-product":
        from .observables import spectral_measure
        from .opalg import SIGMA_X, SIGMA_Z, bloch_state
        from .relations import check_naive_heisenberg
        from .schemes import swap_scheme

        for theta in np.linspace(0.0, math.pi, points):
            r = np.array([0.0, math.sin(theta), math.cos(theta)])
            rho = bloch_state(r)
            scheme = swap_scheme(spectral_measure(SIGMA_Z), rho)
            verdict = check_naive_heisenberg(scheme, SIGMA_Z, SIGMA_X, rho)
            rows.append(
                {"theta": theta, "lhs": verdict.lhs, "rhs": verdict.rhs,
                 "slack": verdict.slack}
            )
    elif relation == "branciard":
        from .relations import check_branciard_joint, qubit_joint_feasible

        rng = np.random.default_rng(config.seed)
        rho = bloch_state_for_sweep()
        made = 0
        while made < points:
            c = rng.uniform(-1, 1, 3)
            d = rng.uniform(-1, 1, 3)
            if np.linalg.norm(c + d) + np.linalg.norm(c - d) > 2:
                continue
            made += 1
            model = qubit_joint_feasible(c, d, a=EZ, b=EX)
            verdict = check_branciard_joint(model, rho)
            rows.append(
                {
                    "c_x": c[0], "c_y": c[1], "c_z": c[2],
                    "d_x": d[0], "d_y": d[1], "d_z": d[2],
                    "lhs": verdict.lhs, "rhs": verdict.rhs, "slack": verdict.slack,
                }
            )
    else:
        raise KeyError(relation)
    return rows


def bloch_state_for_sweep():
    from .opalg import bloch_state

    return bloch_state(EY)


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    if args.relation not in SWEEP_RELATIONS:
        print(
            f"unknown sweep relation {args.relation!r}; choose from {SWEEP_RELATIONS}",
            file=sys.stderr,
        )
        return EXIT_UNKNOWN
    rows = _sweep_rows(args.relation, args.points, config)
    fieldnames = list(rows[0].keys())
    try:
        with open(args.csv_out, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=fieldnames)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(float(v)) for k, v in row.items()})
    except OSError as exc:
        print(f"cannot write {args.csv_out}: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE
    slacks = [row["slack"] for row in rows]
    payload = {
        "schema": SCHEMA,
        "relation": args.relation,
        "points": len(rows),
        "csv": args.csv_out,
        "min_slack": min(slacks),
        "max_slack": max(slacks),
        "negative_slack_rows": sum(1 for s in slacks if s < -1e-9),
    }
    return _emit(payload, args)


def cmd_wasserstein(args) -> int:
    try:
        mu = read_distribution_csv(args.dist_a)
        nu = read_distribution_csv(args.dist_b)
    except (OSError, ValueError) as exc:
        print(f"malformed distribution input: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    value, coupling = w2_quantile(mu, nu)
    print(f"{value:.12g}")
    if args.oracle:
        oracle = w2_lp_oracle(mu, nu)
        if abs(oracle - value) > 1e-9:
            print(
                f"oracle mismatch: quantile={value!r} lp={oracle!r}", file=sys.stderr
            )
            return EXIT_NUMERIC
        print(f"oracle agrees: {oracle:.12g}", file=sys.stderr)
    if args.coupling:
        try:
            coupling.check_marginals(mu, nu)
        except ValueError as exc:
            print(f"coupling verification failed: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        try:
            write_coupling_csv(coupling, args.coupling)
        except OSError as exc:
            print(f"cannot write {args.coupling}: {exc}", file=sys.stderr)
            return EXIT_UNWRITABLE
    return EXIT_OK


def _run_check(relation: str, config: RunConfig) -> tuple[dict, bool]:
    if relation == "ozawa" or relation == "branciard":
        summary = ozawa_branciard_suite(config.seed, config.budget)
        key = "min_ozawa_slack" if relation == "ozawa" else "min_branciard_slack"
        return summary, summary[key] >= -1e-9
    if relation == "naive-product":
        verdicts = naive_falsification_cases(config)
        summary = {"cases": [verdict_to_json(v) for v in verdicts]}
        return summary, all(not v.holds for v in verdicts)
    if relation == "unbiased":
        summary = unbiased_model_suite(config.seed, min(config.budget, 2000))
        ok = all(v >= -1e-9 for k, v in summary.items() if k.startswith("min_slack"))
        return summary, ok
    if relation == "qubit-error-sum":
        summary = epsno_sum_suite(config.seed, config.budget)
        return summary, summary["min_slack"] >= -1e-9
    if relation == "qubit-error-bound":
        rows = _sweep_rows("qubit-error-bound", 25, config)
        worst_gap = max(r["slack"] for r in rows)
        summary = {
            "points": len(rows),
            "min_slack": min(r["slack"] for r in rows),
            "max_optimality_gap": worst_gap,
        }
        return summary, summary["min_slack"] >= -1e-9 and worst_gap < 5e-4
    if relation == "phase-space":
        from .grid import GridSystem, gaussian_state
        from .relations import phase_space_relation_check

        grid = GridSystem(config.grid_n, config.grid_l)
        verdicts = []
        for kwargs in ({}, {"width": 2.0}, {"center": 1.5}):
            tau = gaussian_state(grid, **kwargs)
            verdicts.extend(phase_space_relation_check(grid, tau))
        summary = {"verdicts": [verdict_to_json(v) for v in verdicts]}
        return summary, all(v.holds for v in verdicts)
    if relation == "eps-forms":
        summary = eps_form_equivalence_suite(config.seed, min(config.budget, 1000))
        return summary, summary["max_form_gap"] < 1e-9
    raise KeyError(relation)


def cmd_check(args) -> int:
    config = _config_from_args(args)
    if args.relation not in CHECK_RELATIONS:
        print(
            f"unknown relation {args.relation!r}; choose from {CHECK_RELATIONS}",
            file=sys.stderr,
        )
        return EXIT_UNKNOWN
    summary, ok = _run_check(args.relation, config)
    ok = bool(ok)
    payload = {
        "schema": SCHEMA,
        "relation": args.relation,
        "config": _config_to_json(config),
        "summary": _encode_tree(summary),
        "passed": ok,
    }
    code = _emit(payload, args)
    if code != EXIT_OK:
        return code
    return EXIT_OK if ok else EXIT_NUMERIC


def _encode_tree(obj):
    if isinstance(obj, dict):
        return {k: _encode_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode_tree(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return encode_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    return obj


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool):
    """Global flags, valid before or after the subcommand.

    Subcommand copies default to SUPPRESS so they never clobber values
    parsed at the top level.
    """

    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(0), help="RNG seed (default 0)")
    parser.add_argument(
        "--hbar-scale", type=float, default=default(1.0),
        help="unit annotation for reports; computations stay dimensionless",
    )
    parser.add_argument("--grid-n", type=int, default=default(1024), help="default grid points")
    parser.add_argument(
        "--grid-L", type=float, default=default(12.0), help="default grid half width"
    )
    parser.add_argument(
        "--budget", type=int, default=default(10000),
        help="randomized-suite evaluation budget",
    )
    parser.add_argument(
        "--out", default=default(None), help="write the JSON report here instead of stdout"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmu",
        description=(
            "Quantum measurement rms-error metrics and uncertainty-relation "
            "checkers on a reproducible scenario library."
        ),
    )
    _add_global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    scen = sub.add_parser("scenario", help="list or run bundled scenarios")
    _add_global_flags(scen, suppress=True)
    scen.add_argument("action", choices=["list", "run"])
    scen.add_argument("name", nargs="?", help="scenario name (for run)")
    scen.add_argument("--all", action="store_true", help="run every scenario")
    scen.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override a parameter"
    )
    scen.set_defaults(func=cmd_scenario)

    sweep = sub.add_parser("sweep", help="parameter sweep of a relation, CSV output")
    _add_global_flags(sweep, suppress=True)
    sweep.add_argument("relation", help=f"one of {SWEEP_RELATIONS}")
    sweep.add_argument("csv_out", help="CSV output path")
    sweep.add_argument("--points", type=int, default=50)
    sweep.set_defaults(func=cmd_sweep)

    wass = sub.add_parser("wasserstein", help="2-deviation between two CSV distributions")
    _add_global_flags(wass, suppress=True)
    wass.add_argument("dist_a")
    wass.add_argument("dist_b")
    wass.add_argument("--oracle", action="store_true", help="cross-check with the LP oracle")
    wass.add_argument("--coupling", help="write the optimal coupling to this CSV")
    wass.set_defaults(func=cmd_wasserstein)

    check = sub.add_parser("check", help="run a relation's bundled suite")
    _add_global_flags(check, suppress=True)
    check.add_argument("relation", help=f"one of {CHECK_RELATIONS}")
    check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
