#!/usr/bin/env python3
"""Per-user rate CDFs under the fixed seven-cluster partition."""

import argparse

from coophaul import experiments, netmodel


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/static_cdf")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--drops", type=int, default=100)
    args = parser.parse_args()

    spec = experiments.ExperimentSpec(
        experiment="cdf_static",
        scenario=netmodel.ScenarioConfig(rings=2, system_snr_db=6.2),
        drops=args.drops,
        lambda_values_rel=(1.0, 0.05, 0.01),
    )
    _, paths = experiments.run_experiment(spec, base_seed=args.seed, out_dir=args.out)
    for p in paths:
        print(p)


if __name__ == "__main__":
    main()
