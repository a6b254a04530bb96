#!/usr/bin/env python3
"""One-drop cluster map: site/user positions, cluster labels, and the
active cooperation links (flagging the inter-cluster ones)."""

import argparse

from coophaul import experiments, netmodel


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/cluster_map")
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--snr-db", type=float, default=11.2)
    parser.add_argument("--shadowing", action="store_true")
    parser.add_argument("--n-clusters", type=int, default=7)
    args = parser.parse_args()

    spec = experiments.ExperimentSpec(
        experiment="cluster_map",
        scenario=netmodel.ScenarioConfig(
            rings=2, system_snr_db=args.snr_db, shadowing_enabled=args.shadowing
        ),
        drops=1,
        n_clusters=args.n_clusters,
        lambda_values_rel=(0.1,),
    )
    _, paths = experiments.run_experiment(spec, base_seed=args.seed, out_dir=args.out)
    for p in paths:
        print(p)


if __name__ == "__main__":
    main()
