#!/usr/bin/env python3
"""Four-arm rebalancing experiment: {original, rebalanced} x {baseline,
maximum-likelihood}.  Rebalanced arms use the centered truncated-normal
prior that matches the post-rebalancing balance shape."""

import argparse
import json
import sys
import tempfile

from pcnsim.cli import main as cli_main


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=20240801)
    parser.add_argument("--pairs", type=int, default=100)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--output-dir", default="out/rebalancing")
    args = parser.parse_args()

    normal_prior = {"type": "normal", "mean_frac": 0.5, "stddev_frac": 0.1}
    config = {
        "seed": args.seed,
        "mode": "static",
        "synthetic": {"kind": "kernel"},
        "pairs": args.pairs,
        "amounts": {"min": 1, "max": 20, "step": 1, "unit": "mbtc"},
        "parts": [1],
        "max_attempts": 1000,
        "workers": args.workers,
        "arms": [
            {"name": "baseline", "strategy": "baseline", "candidate_count": 1000},
            {"name": "ml", "strategy": "max-likelihood", "candidate_count": 1000},
            {"name": "rebalanced_baseline", "strategy": "baseline",
             "candidate_count": 1000, "rebalance": True, "prior": normal_prior},
            {"name": "rebalanced_ml", "strategy": "max-likelihood",
             "candidate_count": 1000, "rebalance": True, "prior": normal_prior},
        ],
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(config, fh)
        path = fh.name
    return cli_main(["simulate", "--config", path, "--output-dir", args.output_dir])


if __name__ == "__main__":
    sys.exit(main())
