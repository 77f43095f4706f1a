#!/usr/bin/env python3
"""Export every closed-form figure CSV (no simulation involved)."""

import argparse
import sys

from pcnsim.cli import main as cli_main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output-dir", default="out/figures")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sys.exit(
        cli_main(["analyze", "--output-dir", args.output_dir, "--seed", str(args.seed)])
    )
