#!/usr/bin/env python3
"""Model-validation run: dynamic mode on a fixed chain of uniform channels.

Measured mean attempts per (amount fraction, parts) cell are written next to
the closed-form expectation k/s for comparison.
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from pcnsim.analytics import uniform_path_success
from pcnsim.graph import k_shortest_paths
from pcnsim.simulator import (
    Baseline,
    PaymentTask,
    SimulationMode,
    run_payment,
    session_seed,
)
from pcnsim.synthetic import validation_chain


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--capacity", type=int, default=1_000_000)
    parser.add_argument("--uncertain-hops", type=int, default=1)
    parser.add_argument("--sessions", type=int, default=20_000)
    parser.add_argument("--parts", type=int, nargs="+", default=[1, 2, 3])
    parser.add_argument("--fractions", type=float, nargs="+",
                        default=[f / 100 for f in range(10, 100, 10)])
    parser.add_argument("--output", default="out/validation.csv")
    args = parser.parse_args()

    graph = validation_chain(args.uncertain_hops, args.capacity)
    sender, receiver = "v0", f"v{args.uncertain_hops + 1}"
    candidates = k_shortest_paths(graph, sender, receiver, 10)

    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# seed={args.seed} sessions={args.sessions}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["amount_fraction", "parts", "sessions", "mean_attempts",
             "stderr", "expected_attempts", "z"]
        )
        for fraction in args.fractions:
            amount = int(fraction * args.capacity)
            for parts in args.parts:
                rng = np.random.default_rng(
                    session_seed(args.seed, "validation", int(fraction * 100),
                                 amount, parts)
                )
                task = PaymentTask(sender, receiver, amount, parts)
                counts = np.empty(args.sessions)
                for i in range(args.sessions):
                    counts[i] = run_payment(
                        graph, task, SimulationMode.DYNAMIC, Baseline(), rng,
                        max_attempts=100_000, candidates=candidates,
                    ).total_attempts
                expected = parts / uniform_path_success(
                    amount / parts, args.capacity, args.uncertain_hops
                )
                stderr = counts.std() / math.sqrt(args.sessions)
                writer.writerow(
                    [fraction, parts, args.sessions, repr(counts.mean()),
                     repr(stderr), repr(expected),
                     repr(float((counts.mean() - expected) / stderr))]
                )
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
