#!/usr/bin/env python3
"""Jointly optimized clusters/equalizer: per-cell rate vs total traffic,
under both within-cluster sharing models (full mesh vs cluster head)."""

import argparse

from coophaul import experiments, netmodel


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/dynamic_rate")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--drops", type=int, default=50)
    parser.add_argument("--lambda-rel", type=float, default=1.0)
    args = parser.parse_args()

    spec = experiments.ExperimentSpec(
        experiment="dynamic_rate",
        scenario=netmodel.ScenarioConfig(rings=2, system_snr_db=11.8),
        drops=args.drops,
        lambda_values_rel=(args.lambda_rel,),
        n_clusters_list=tuple(range(1, 20, 2)),
        greedy_sizes=(1, 2, 4, 8, 16, 19),
    )
    _, paths = experiments.run_experiment(spec, base_seed=args.seed, out_dir=args.out)
    for p in paths:
        print(p)


if __name__ == "__main__":
    main()
