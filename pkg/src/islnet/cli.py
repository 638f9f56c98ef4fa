"""Command-line interface: run experiments, validate scenarios, calibrate.

Exit codes: 0 success, 2 scenario validation error, 3 infeasible scenario
(unbuildable structure, disconnected graph, over-budget search space).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .dynamics import (
    AvailabilityModel,
    availability_ratio,
    calibrate_fail_coefficient,
    edge_dynamics,
    normalize_asr,
    sample_epochs,
    simulate_availability,
)
from .experiments import _union_features, run_experiment
from .optimizer import InfeasibleError
from .routing import UnreachableError
from .scenario import EXPERIMENTS, ScenarioError, load_scenario
from .seeding import derive_seed
from .structure import build_feature_graph, parse_feature

OUT_ENV = "ISLNET_OUT"


def _out_root(arg: str | None) -> str:
    return arg or os.environ.get(OUT_ENV) or "out"


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    experiments = EXPERIMENTS if args.experiment == "all" else (args.experiment,)
    for experiment in experiments:
        manifest = run_experiment(
            scenario,
            experiment,
            _out_root(args.out),
            seed=args.seed,
            figures=not args.no_figures,
            dump_trace=args.dump_trace,
        )
        print(f"{experiment}: wrote {len(manifest.outputs)} files under "
              f"{_out_root(args.out)}/{scenario.name}/{experiment}")
    return 0


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(f"{scenario.name}: OK ({scenario.config.n_planes}x{scenario.config.sats_per_plane}, "
          f"F={scenario.config.phase_factor}, i={math.degrees(scenario.config.inclination):.1f} deg, "
          f"h={scenario.config.altitude_km:g} km, {scenario.config.kind.value}, "
          f"{len(scenario.motifs)} motifs, hash {scenario.scenario_hash()[:12]})")
    return 0


def _cmd_calibrate(args) -> int:
    scenario = load_scenario(args.scenario)
    features = [parse_feature(t) for t in args.feature]
    graph = build_feature_graph(
        scenario.config, _union_features(scenario.motifs), scenario.capacity_gbps
    )
    model = AvailabilityModel(
        scenario.fail_coefficient, scenario.recovery_s, scenario.step_s,
        derive_seed(args.seed if args.seed is not None else scenario.seed, "calibrate"),
    )
    dyn = edge_dynamics(graph, sample_epochs(model, scenario.horizon_s))
    star = normalize_asr(dyn.asr)
    masks = [graph.feature_mask(f) for f in features]
    for f, mask in zip(features, masks):
        if not mask.any():
            print(f"feature {f} has no edges in the candidate set", file=sys.stderr)
            return 3
    alpha = calibrate_fail_coefficient(
        graph, model, scenario.horizon_s, args.target_ra, masks, asr_star=star
    )
    fitted = AvailabilityModel(alpha, scenario.recovery_s, scenario.step_s, model.seed)
    trace = simulate_availability(graph, fitted, scenario.horizon_s, asr_star=star)
    ratios = availability_ratio(trace)
    achieved = sum(float(ratios[m].mean()) for m in masks) / len(masks)
    print(f"fail_coefficient={alpha:.6f} achieved_ra={achieved:.4f} target_ra={args.target_ra:.4f}")
    for f, mask in zip(features, masks):
        print(f"  {f}: R_a={float(ratios[mask].mean()):.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="islnet",
        description="Simulate and optimize inter-satellite-link structures "
                    "of mega-constellation networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a batch experiment on a scenario")
    p_run.add_argument("scenario", help="scenario file or bundled name (e.g. reference-24x36)")
    p_run.add_argument("--experiment", default="all", choices=EXPERIMENTS + ("all",))
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out", default=None, help=f"output root (default ${OUT_ENV} or ./out)")
    p_run.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p_run.add_argument("--dump-trace", action="store_true",
                       help="write the full per-edge availability trace CSV")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("scenario")
    p_val.set_defaults(func=_cmd_validate)

    p_cal = sub.add_parser(
        "calibrate-availability",
        help="fit the failure coefficient to a target availability ratio",
    )
    p_cal.add_argument("scenario")
    p_cal.add_argument("--target-ra", type=float, required=True)
    p_cal.add_argument("--feature", action="append", required=True,
                       help="connection feature '(x,y)'; repeat to average several")
    p_cal.add_argument("--seed", type=int, default=None)
    p_cal.set_defaults(func=_cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, UnreachableError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # build/evaluation failures on an otherwise valid scenario
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
