#!/usr/bin/env python3
"""Information-gain sweep on the constant-capacity preset: median session
gain per amount fraction for 1-3 payment parts (fractions above 100% only
make sense for the multi-part cases)."""

import argparse
import json
import sys
import tempfile

from pcnsim.cli import main as cli_main


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=20240801)
    parser.add_argument("--pairs", type=int, default=100)
    parser.add_argument("--capacity", type=int, default=1_000_000)
    parser.add_argument("--step", type=float, default=0.05)
    parser.add_argument("--max-fraction", type=float, default=3.0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--output-dir", default="out/infogain")
    args = parser.parse_args()

    config = {
        "seed": args.seed,
        "mode": "static",
        "synthetic": {"kind": "kernel-constant", "capacity": args.capacity},
        "pairs": args.pairs,
        "amounts": {"min": args.step, "max": args.max_fraction,
                     "step": args.step, "unit": "capacity-fraction"},
        "parts": [1, 2, 3],
        "max_attempts": 200,
        "workers": args.workers,
        "arms": [{"name": "probe", "strategy": "baseline", "candidate_count": 1000}],
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(config, fh)
        path = fh.name
    return cli_main(["infogain", "--config", path, "--output-dir", args.output_dir])


if __name__ == "__main__":
    sys.exit(main())
