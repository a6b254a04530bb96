#!/usr/bin/env python3
"""Distributed-cooperation error vs backhaul traffic on the 19-site network.

Writes sweep.csv / drops.csv under --out; plot with
`coophaul-plot --fig mse_vs_traffic --in <out> --out <svg>`.
"""

import argparse

from coophaul import experiments, netmodel


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/mse_sweep")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--drops", type=int, default=200)
    parser.add_argument("--snr-db", type=float, default=6.2)
    args = parser.parse_args()

    spec = experiments.ExperimentSpec(
        experiment="mse_vs_traffic",
        scenario=netmodel.ScenarioConfig(rings=2, system_snr_db=args.snr_db),
        drops=args.drops,
    )
    _, paths = experiments.run_experiment(spec, base_seed=args.seed, out_dir=args.out)
    for p in paths:
        print(p)


if __name__ == "__main__":
    main()
