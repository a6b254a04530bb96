"""Command-line entry points for the experiment driver."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import experiments, netmodel


def _add_scenario_flags(parser):
    parser.add_argument("--rings", type=int, default=2)
    parser.add_argument("--snr-db", type=float, default=6.2)
    parser.add_argument("--antennas", type=int, default=1)
    parser.add_argument("--no-shadowing", action="store_true")
    parser.add_argument("--no-fading", action="store_true")


def _scenario_from(args) -> netmodel.ScenarioConfig:
    return netmodel.ScenarioConfig(
        rings=args.rings,
        antennas_per_bs=args.antennas,
        users_per_bs=args.antennas,
        system_snr_db=args.snr_db,
        shadowing_enabled=not args.no_shadowing,
        fading_enabled=not args.no_fading,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coophaul",
        description="Backhaul-aware multi-cell cooperation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment described by a spec file")
    p_run.add_argument("--spec", required=True, help="flat key=value experiment file")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--drops", type=int, default=None, help="override the spec's drop count")
    p_run.add_argument("--threads", type=int, default=1)

    p_sweep = sub.add_parser("sweep", help="penalty sweep: equalizer error vs backhaul traffic")
    _add_scenario_flags(p_sweep)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--drops", type=int, default=200)
    p_sweep.add_argument("--grid-points", type=int, default=30)
    p_sweep.add_argument("--threads", type=int, default=1)

    p_dec = sub.add_parser("decentral", help="decentralized convergence studies")
    _add_scenario_flags(p_dec)
    p_dec.add_argument("--mode", choices=("admm", "oi"), default="admm")
    p_dec.add_argument("--seed", type=int, default=0)
    p_dec.add_argument("--out", required=True)
    p_dec.add_argument("--rho", type=float, default=0.1)
    p_dec.add_argument("--rounds", type=int, default=2000)
    p_dec.add_argument("--lambda-rel", type=float, default=None)
    p_dec.add_argument("--n-clusters", type=int, default=9)

    p_cl = sub.add_parser("clusters", help="dynamic clustering map for one drop")
    _add_scenario_flags(p_cl)
    p_cl.add_argument("--seed", type=int, default=0)
    p_cl.add_argument("--out", required=True)
    p_cl.add_argument("--n-clusters", type=int, default=7)
    p_cl.add_argument("--lambda-rel", type=float, default=0.1)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = experiments.ExperimentSpec.from_file(args.spec)
            if args.drops is not None:
                spec = dataclasses.replace(spec, drops=args.drops)
            _, paths = experiments.run_experiment(
                spec, base_seed=args.seed, out_dir=args.out, threads=args.threads
            )
        elif args.command == "sweep":
            spec = experiments.ExperimentSpec(
                experiment="mse_vs_traffic",
                scenario=_scenario_from(args),
                drops=args.drops,
                lambda_grid_points=args.grid_points,
            )
            _, paths = experiments.run_experiment(
                spec, base_seed=args.seed, out_dir=args.out, threads=args.threads
            )
        elif args.command == "decentral":
            spec = experiments.ExperimentSpec(
                experiment="admm_convergence" if args.mode == "admm" else "oi_convergence",
                scenario=_scenario_from(args),
                drops=1,
                rho=args.rho,
                admm_rounds=args.rounds,
                n_clusters=args.n_clusters,
                lambda_values_rel=(args.lambda_rel,) if args.lambda_rel is not None else (),
            )
            _, paths = experiments.run_experiment(spec, base_seed=args.seed, out_dir=args.out)
        elif args.command == "clusters":
            spec = experiments.ExperimentSpec(
                experiment="cluster_map",
                scenario=_scenario_from(args),
                drops=1,
                n_clusters=args.n_clusters,
                lambda_values_rel=(args.lambda_rel,),
            )
            _, paths = experiments.run_experiment(spec, base_seed=args.seed, out_dir=args.out)
        else:  # pragma: no cover
            return 2
    except (experiments.ExperimentError, netmodel.ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(Path(p))
    return 0


if __name__ == "__main__":
    sys.exit(main())
