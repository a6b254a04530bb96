#!/usr/bin/env python3
"""Convergence traces for the decentralized protocols (consensus ADMM and
the distributed eigensolver) against their centralized references."""

import argparse

from coophaul import experiments, netmodel


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/decentral")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", choices=("admm", "oi"), default="admm")
    parser.add_argument("--rounds", type=int, default=2000)
    args = parser.parse_args()

    if args.mode == "admm":
        spec = experiments.ExperimentSpec(
            experiment="admm_convergence",
            scenario=netmodel.ScenarioConfig(
                rings=1, system_snr_db=-10.0, shadowing_enabled=False
            ),
            drops=1,
            clusters_preset="singletons",
            admm_rounds=args.rounds,
        )
    else:
        spec = experiments.ExperimentSpec(
            experiment="oi_convergence",
            scenario=netmodel.ScenarioConfig(rings=2, system_snr_db=-10.0, rng_seed=1),
            drops=1,
            n_clusters=9,
            lambda_values_rel=(0.02,),
            admm_rounds=args.rounds,
        )
    _, paths = experiments.run_experiment(spec, base_seed=args.seed, out_dir=args.out)
    for p in paths:
        print(p)


if __name__ == "__main__":
    main()
