"""Command-line front end: closed-form figure exports, simulation sweeps,
rebalancing, and information-gain experiments.

Every CSV starts with a comment line carrying the config hash and seed, then
an RFC-4180 header row (LF line endings, UTF-8).  Exit codes: 0 success,
2 configuration error, 3 input-data error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import traceback
from fnmatch import fnmatch
from pathlib import Path

import numpy as np

from .analytics import (
    attempts_for_slo_mpp,
    attempts_for_slo_single,
    break_even_amount,
    expected_attempts,
    mixed_model_success,
    uniform_path_success,
)
from .config import (
    ArmConfig,
    ConfigError,
    ExperimentConfig,
    prior_factory_from_spec,
)
from .graph import ChannelGraph, NoPath, ParseError, ValidationError, load_graph, save_graph
from .simulator import (
    Baseline,
    MaximumLikelihood,
    SimulationMode,
    ensure_static_balances,
    rebalance_graph,
    run_experiment,
)
from .synthetic import synthetic_kernel, validation_chain, with_constant_capacity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

REFERENCE_CAPACITY = 1_000_000  # constant capacity behind the closed-form figures


def _write_csv(path, header, rows, config_hash, seed):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash} seed={seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# analyze: closed-form figure data.
# ---------------------------------------------------------------------------


def cmd_analyze(config: ExperimentConfig, output_dir: Path) -> int:
    tag = config.config_hash()
    seed = config.seed
    slo_default = config.slo
    c = REFERENCE_CAPACITY

    rows = [(i / 100, expected_attempts(i / 100, 1)) for i in range(1, 100)]
    _write_csv(
        output_dir / "expected_attempts_vs_success.csv",
        ["success_prob", "expected_attempts"], rows, tag, seed,
    )

    rows = [
        (i / 100, sigma, attempts_for_slo_single(i / 100, sigma))
        for sigma in (0.9, 0.99, 0.999)
        for i in range(1, 100)
    ]
    _write_csv(
        output_dir / "slo_attempts_vs_success.csv",
        ["success_prob", "objective", "attempts"], rows, tag, seed,
    )

    rows = [
        (sigma, s, attempts_for_slo_single(s, sigma))
        for s in (0.1, 0.25, 0.5, 0.75)
        for sigma in (0.5, 0.75, 0.9, 0.95, 0.99, 0.995, 0.999)
    ]
    _write_csv(
        output_dir / "slo_attempts_vs_objective.csv",
        ["objective", "success_prob", "attempts"], rows, tag, seed,
    )

    rows = [
        (hops, f, uniform_path_success(f * c, c, hops))
        for f in (0.01, 0.05, 0.1, 0.2, 0.5)
        for hops in range(0, 11)
    ]
    _write_csv(
        output_dir / "path_success_vs_hops.csv",
        ["hops", "amount_fraction", "success_prob"], rows, tag, seed,
    )

    rows = [
        (i / 100, hops, uniform_path_success(i / 100 * c, c, hops))
        for hops in (1, 2, 3, 5)
        for i in range(0, 101)
    ]
    _write_csv(
        output_dir / "path_success_vs_amount.csv",
        ["amount_fraction", "hops", "success_prob"], rows, tag, seed,
    )

    rows = [
        (i / 100, hops, 1.0 / uniform_path_success(i / 100 * c, c, hops))
        for hops in (1, 2, 3)
        for i in range(1, 100)
    ]
    _write_csv(
        output_dir / "expected_attempts_vs_amount.csv",
        ["amount_fraction", "hops", "expected_attempts"], rows, tag, seed,
    )

    rows = []
    for hops in (1, 2):
        for parts in (1, 2, 3):
            for i in range(1, 100):
                f = i / 100
                full = uniform_path_success(f * c, c, hops)
                per_part = uniform_path_success(f * c / parts, c, hops)
                rows.append((full, f, hops, parts, parts / per_part))
    _write_csv(
        output_dir / "expected_attempts_split_curves.csv",
        ["full_amount_success", "amount_fraction", "hops", "parts", "expected_attempts"],
        rows, tag, seed,
    )

    rows = []
    for f, hops in ((0.2, 1), (0.4, 1), (0.4, 2), (0.6, 2), (0.8, 3)):
        single = attempts_for_slo_single(uniform_path_success(f * c, c, hops), slo_default)
        for parts in range(1, 13):
            s_part = uniform_path_success(f * c / parts, c, hops)
            n = attempts_for_slo_mpp(s_part, parts, slo_default, n_cap=max(single, parts))
            rows.append((f, hops, parts, "" if n is None else n))
    _write_csv(
        output_dir / "slo_attempts_vs_parts.csv",
        ["amount_fraction", "hops", "parts", "attempts"], rows, tag, seed,
    )

    rows = [
        (hops, p, mixed_model_success(int(0.1 * c), c, hops, p))
        for p in (0.0, 0.3, 0.5, 0.7, 1.0)
        for hops in range(1, 11)
    ]
    _write_csv(
        output_dir / "mixed_success_vs_hops.csv",
        ["hops", "p_bimodal", "success_prob"], rows, tag, seed,
    )

    rows = [
        (hops, k1, k1 + 1, break_even_amount(c, hops, k1, k1 + 1) / c)
        for hops in (1, 2, 3)
        for k1 in range(1, 6)
    ]
    _write_csv(
        output_dir / "break_even_amounts.csv",
        ["hops", "parts_from", "parts_to", "break_even_fraction"], rows, tag, seed,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Shared experiment plumbing.
# ---------------------------------------------------------------------------


def _build_graph(config: ExperimentConfig) -> ChannelGraph:
    default_prior = prior_factory_from_spec(config.prior, "prior")
    if config.graph_path is not None:
        graph = load_graph(
            config.graph_path,
            default_prior=default_prior,
            trust_balances=config.trust_balances,
        )
    else:
        spec = dict(config.synthetic)
        kind = spec.pop("kind", "kernel")
        graph_seed = int(spec.pop("graph_seed", config.seed))
        if kind == "kernel":
            graph = synthetic_kernel(
                seed=graph_seed,
                n_nodes=int(spec.pop("nodes", 137)),
                n_channels=int(spec.pop("channels", 882)),
                capacity_median=int(spec.pop("capacity_median", 4_000_000)),
                capacity_sigma=float(spec.pop("capacity_sigma", 1.2)),
                prior_factory=default_prior,
            )
        elif kind == "kernel-constant":
            capacity = int(spec.pop("capacity", REFERENCE_CAPACITY))
            graph = synthetic_kernel(
                seed=graph_seed,
                n_nodes=int(spec.pop("nodes", 137)),
                n_channels=int(spec.pop("channels", 882)),
            )
            graph = with_constant_capacity(graph, capacity, prior_factory=default_prior)
        elif kind == "chain":
            # The validation preset builds its own priors (pinned first hop).
            graph = validation_chain(
                uncertain_hops=int(spec.pop("uncertain_hops", 1)),
                capacity=int(spec.pop("capacity", REFERENCE_CAPACITY)),
            )
        else:
            raise ConfigError(f"synthetic.kind: unknown kind {kind!r}")
        unknown = [k for k in spec if k != "graph_seed"]
        if unknown:
            raise ConfigError(f"synthetic: unknown fields {unknown}")

    if config.priors:
        overrides = list(config.priors.items())

        def prior_for(ch):
            for pattern, spec in overrides:
                if fnmatch(ch.id, pattern):
                    return prior_factory_from_spec(spec)(ch.capacity)
            return ch.prior

        graph = graph.with_priors(prior_for)
    return graph


def _resolve_pairs(config: ExperimentConfig, graph: ChannelGraph):
    if isinstance(config.pairs, list):
        for i, (a, b) in enumerate(config.pairs):
            for node in (a, b):
                if node not in graph.nodes:
                    raise ConfigError(f"pairs[{i}]: unknown node {node}")
        pairs = list(config.pairs)
    else:
        names = sorted(graph.nodes)
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x70616972]))
        pairs = []
        while len(pairs) < config.pairs:
            a, b = rng.choice(len(names), size=2, replace=False)
            pairs.append((names[int(a)], names[int(b)]))
    # Tiling repeats each pair as an independent session (distinct substream
    # per pair index): the way to get many sessions per grid cell.
    return pairs * config.repeat_pairs


def _resolve_amounts(config: ExperimentConfig, graph: ChannelGraph):
    constant = None
    capacities = {ch.capacity for ch in graph.channels.values()}
    if len(capacities) == 1:
        constant = capacities.pop()
    return config.amounts.resolve(constant_capacity=constant)


def _strategy_for(arm: ArmConfig):
    if arm.strategy == "max-likelihood":
        return MaximumLikelihood(arm.candidate_count)
    return Baseline(arm.candidate_count)


def _run_arms(config: ExperimentConfig, arm_filter=None, workers=None):
    graph = _build_graph(config)
    mode = SimulationMode.STATIC if config.mode == "static" else SimulationMode.DYNAMIC
    if mode is SimulationMode.STATIC:
        graph = ensure_static_balances(graph, config.seed)
    pairs = _resolve_pairs(config, graph)
    amounts = _resolve_amounts(config, graph)

    arms = list(config.arms)
    if arm_filter:
        wanted = set(arm_filter)
        unknown = wanted - {a.name for a in arms}
        if unknown:
            raise ConfigError(f"--arm: unknown arm names {sorted(unknown)}")
        arms = [a for a in arms if a.name in wanted]

    rebalanced = None
    all_rows = []
    label_by_amount = {sat: label for label, sat in amounts}
    for arm in arms:
        arm_graph = graph
        if arm.rebalance:
            if mode is not SimulationMode.STATIC:
                raise ConfigError(f"arms[{arm.name}]: rebalancing needs static mode")
            if rebalanced is None:
                rebalanced = rebalance_graph(
                    graph,
                    tolerance=config.rebalance_tolerance,
                    max_iterations=config.rebalance_max_iterations,
                )
            arm_graph = rebalanced
        if arm.prior is not None:
            factory = prior_factory_from_spec(arm.prior)
            arm_graph = arm_graph.with_priors(lambda ch: factory(ch.capacity))
        rows = run_experiment(
            arm_graph,
            pairs,
            [sat for _, sat in amounts],
            list(config.parts),
            mode,
            _strategy_for(arm),
            config.seed,
            arm=arm.name,
            max_attempts=config.max_attempts,
            workers=workers if workers is not None else config.workers,
        )
        all_rows.extend(rows)
    return all_rows, label_by_amount, [a.name for a in arms], mode


def _result_csv_rows(rows):
    out = []
    for r in rows:
        out.append(
            (
                r.arm, r.pair_index, r.sender, r.receiver, r.amount, r.parts,
                int(r.result.delivered), r.result.total_attempts,
                repr(r.result.session_info_gain),
                repr(r.result.first_path_success_prob),
            )
        )
    return out


def _summarize(rows, arm_names, label_by_amount):
    by_arm = {name: [r for r in rows if r.arm == name] for name in arm_names}
    summary = {}
    for name, arm_rows in by_arm.items():
        delivered = [r for r in arm_rows if r.result.delivered]
        per_amount = {}
        for r in arm_rows:
            per_amount.setdefault(r.amount, []).append(r)
        amount_stats = {}
        for amount, cell_rows in sorted(per_amount.items()):
            cell_delivered = [r for r in cell_rows if r.result.delivered]
            attempts = [r.result.total_attempts for r in cell_delivered]
            amount_stats[str(label_by_amount.get(amount, amount))] = {
                "sessions": len(cell_rows),
                "delivered": len(cell_delivered),
                "mean_attempts": statistics.fmean(attempts) if attempts else None,
                "median_attempts": statistics.median(attempts) if attempts else None,
                "median_session_info_gain_nats": (
                    statistics.median(r.result.session_info_gain for r in cell_rows)
                ),
            }
        attempts = [r.result.total_attempts for r in delivered]
        summary[name] = {
            "sessions": len(arm_rows),
            "delivered": len(delivered),
            "undeliverable": len(arm_rows) - len(delivered),
            "mean_attempts": statistics.fmean(attempts) if attempts else None,
            "median_attempts": statistics.median(attempts) if attempts else None,
            "mean_session_info_gain_nats": (
                statistics.fmean(r.result.session_info_gain for r in arm_rows)
                if arm_rows
                else None
            ),
            "per_amount": amount_stats,
        }
    return by_arm, summary


def _paired_reduction(reference_rows, arm_rows, seed):
    """Mean-attempt reduction over cells delivered in both arms, with a 95%
    bootstrap interval resampling payment pairs."""
    ref = {(r.pair_index, r.amount, r.parts): r.result for r in reference_rows}
    other = {(r.pair_index, r.amount, r.parts): r.result for r in arm_rows}
    keys = [
        key for key in ref
        if key in other and ref[key].delivered and other[key].delivered
    ]
    if not keys:
        return None
    ref_mean = statistics.fmean(ref[key].total_attempts for key in keys)
    other_mean = statistics.fmean(other[key].total_attempts for key in keys)
    reduction = 100.0 * (ref_mean - other_mean) / ref_mean

    by_pair = {}
    for key in keys:
        by_pair.setdefault(key[0], []).append(key)
    pair_ids = sorted(by_pair)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x626F6F74]))
    draws = []
    for _ in range(2000):
        sample = rng.integers(0, len(pair_ids), size=len(pair_ids))
        ref_total = other_total = count = 0
        for idx in sample:
            for key in by_pair[pair_ids[int(idx)]]:
                ref_total += ref[key].total_attempts
                other_total += other[key].total_attempts
                count += 1
        if count and ref_total:
            draws.append(100.0 * (ref_total - other_total) / ref_total)
    draws.sort()
    lo = draws[int(0.025 * len(draws))] if draws else None
    hi = draws[int(0.975 * len(draws)) - 1] if draws else None
    return {
        "paired_cells": len(keys),
        "reference_mean_attempts": ref_mean,
        "arm_mean_attempts": other_mean,
        "reduction_percent": reduction,
        "reduction_ci95": [lo, hi],
    }


def cmd_simulate(config: ExperimentConfig, output_dir: Path, arm_filter=None, workers=None) -> int:
    rows, label_by_amount, arm_names, mode = _run_arms(config, arm_filter, workers)
    tag = config.config_hash()
    _write_csv(
        output_dir / "results.csv",
        [
            "arm", "pair_id", "sender", "receiver", "amount", "parts",
            "delivered", "attempts", "session_info_gain_nats",
            "first_path_success_prob",
        ],
        _result_csv_rows(rows),
        tag,
        config.seed,
    )
    by_arm, summary = _summarize(rows, arm_names, label_by_amount)
    reductions = {}
    if len(arm_names) > 1:
        reference = arm_names[0]
        for name in arm_names[1:]:
            stats = _paired_reduction(by_arm[reference], by_arm[name], config.seed)
            if stats is not None:
                stats["vs"] = reference
                reductions[name] = stats
    payload = {
        "config_hash": tag,
        "seed": config.seed,
        "mode": config.mode,
        "info_gain_semantics": (
            "final_posterior_vs_session_prior"
            if mode is SimulationMode.STATIC
            else "per_attempt_sums_beliefs_reset_each_attempt"
        ),
        "arms": summary,
        "reductions": reductions,
    }
    _write_json(output_dir / "summary.json", payload)
    return EXIT_OK


def cmd_infogain(config: ExperimentConfig, output_dir: Path, workers=None) -> int:
    rows, label_by_amount, arm_names, mode = _run_arms(config, workers=workers)
    tag = config.config_hash()
    cells = {}
    for r in rows:
        cells.setdefault((r.arm, r.amount, r.parts), []).append(r.result)
    out = []
    for (arm, amount, parts), results in sorted(cells.items()):
        gains = [res.session_info_gain for res in results]
        out.append(
            (
                arm, label_by_amount.get(amount, amount), amount, parts,
                len(results), sum(1 for res in results if res.delivered),
                repr(statistics.median(gains)),
            )
        )
    _write_csv(
        output_dir / "infogain_median.csv",
        [
            "arm", "amount", "amount_sat", "parts", "sessions", "delivered",
            "median_session_gain_nats",
        ],
        out,
        tag,
        config.seed,
    )
    return EXIT_OK


def cmd_rebalance(graph_path, output_path, histogram_path, tolerance, max_iterations) -> int:
    import hashlib

    graph = load_graph(graph_path)
    missing = [
        cid for cid, ch in graph.channels.items() if ch.ground_truth_balance is None
    ]
    if missing:
        raise ValidationError(
            f"rebalancing needs every balance; missing for channels {missing[:5]}"
        )
    result = rebalance_graph(graph, tolerance=tolerance, max_iterations=max_iterations)
    save_graph(result, output_path)

    def ratio_histogram(g):
        counts = [0] * 20
        for ch in g.channels.values():
            ratio = ch.ground_truth_balance / ch.capacity
            counts[min(19, int(ratio * 20))] += 1
        return counts

    before = ratio_histogram(graph)
    after = ratio_histogram(result)
    rows = [
        (i / 20, (i + 1) / 20, before[i], after[i]) for i in range(20)
    ]
    # The transform is deterministic, so stamp the input file instead of a seed.
    input_tag = hashlib.sha256(Path(graph_path).read_bytes()).hexdigest()[:12]
    _write_csv(
        Path(histogram_path),
        ["ratio_bin_lo", "ratio_bin_hi", "before_count", "after_count"],
        rows, input_tag, "deterministic",
    )
    return EXIT_OK


def cmd_gen_snapshot(args) -> int:
    graph = synthetic_kernel(
        seed=args.seed,
        n_nodes=args.nodes,
        n_channels=args.channels,
        capacity_median=args.capacity_median,
        capacity_sigma=args.capacity_sigma,
    )
    if args.constant_capacity:
        graph = with_constant_capacity(graph, args.constant_capacity)
    if args.with_balances:
        graph = ensure_static_balances(graph, args.seed)
    save_graph(graph, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing and dispatch.
# ---------------------------------------------------------------------------


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    config = ExperimentConfig.load(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "mode", None):
        overrides["mode"] = args.mode
    if getattr(args, "graph", None):
        overrides["graph_path"] = args.graph
        overrides["synthetic"] = None
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcnsim",
        description=(
            "Reliability and privacy analytics plus a payment simulator for "
            "channel networks with uncertain balances"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", help="experiment config (TOML or JSON)",
                       required=needs_config)
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, help="parallel session workers")
        p.add_argument("--output-dir", default=None, help="output directory")

    p = sub.add_parser("analyze", help="export closed-form figure data as CSV")
    common(p, needs_config=False)

    p = sub.add_parser("simulate", help="run the payment simulation arms")
    common(p)
    p.add_argument("--arm", action="append", help="run only this arm (repeatable)")
    p.add_argument("--mode", choices=["static", "dynamic"], help="override mode")
    p.add_argument("--graph", help="override the graph file path")

    p = sub.add_parser("infogain", help="median per-session information gain sweep")
    common(p)

    p = sub.add_parser("rebalance", help="rebalance a snapshot along cycles")
    p.add_argument("--graph", required=True, help="input graph JSON (with balances)")
    p.add_argument("--output", required=True, help="rebalanced graph JSON path")
    p.add_argument("--histogram", default=None, help="ratio histogram CSV path")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iterations", type=int, default=20_000)

    p = sub.add_parser("gen-snapshot", help="write a synthetic kernel snapshot")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--nodes", type=int, default=137)
    p.add_argument("--channels", type=int, default=882)
    p.add_argument("--capacity-median", type=int, default=4_000_000)
    p.add_argument("--capacity-sigma", type=float, default=1.2)
    p.add_argument("--constant-capacity", type=int, default=None)
    p.add_argument("--with-balances", action="store_true")
    p.add_argument("--output", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            if args.config:
                config = _load_config(args)
            else:
                config = ExperimentConfig.from_dict(
                    {"seed": args.seed if args.seed is not None else 0,
                     "synthetic": {"kind": "kernel"},
                     "amounts": {"min": 1, "max": 1, "step": 1}}
                )
            out = Path(args.output_dir or config.output_dir)
            return cmd_analyze(config, out)
        if args.command == "simulate":
            config = _load_config(args)
            out = Path(args.output_dir or config.output_dir)
            return cmd_simulate(config, out, arm_filter=args.arm, workers=args.workers)
        if args.command == "infogain":
            config = _load_config(args)
            out = Path(args.output_dir or config.output_dir)
            return cmd_infogain(config, out, workers=args.workers)
        if args.command == "rebalance":
            histogram = args.histogram or str(
                Path(args.output).with_suffix("")
            ) + "_ratio_histogram.csv"
            return cmd_rebalance(
                args.graph, args.output, histogram, args.tolerance, args.max_iterations
            )
        if args.command == "gen-snapshot":
            return cmd_gen_snapshot(args)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, ValidationError, NoPath, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
