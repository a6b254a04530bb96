#!/usr/bin/env python3
"""Per-cell rates of penalized cooperation vs the greedy clustering baseline."""

import argparse

from coophaul import experiments, netmodel


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/rate_vs_traffic")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--drops", type=int, default=100)
    parser.add_argument("--antennas", type=int, default=1)
    args = parser.parse_args()

    spec = experiments.ExperimentSpec(
        experiment="rate_vs_traffic",
        scenario=netmodel.ScenarioConfig(
            rings=2, system_snr_db=11.8,
            antennas_per_bs=args.antennas, users_per_bs=args.antennas,
        ),
        drops=args.drops,
        lambda_grid_points=12,
    )
    _, paths = experiments.run_experiment(spec, base_seed=args.seed, out_dir=args.out)
    for p in paths:
        print(p)


if __name__ == "__main__":
    main()
