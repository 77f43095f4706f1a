import csv
import hashlib
import json
from pathlib import Path

import pytest

from pcnsim.analytics import uniform_path_success
from pcnsim.cli import main


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        comment = fh.readline()
        assert comment.startswith("# config_hash=")
        return list(csv.DictReader(fh))


def file_hash(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_config(tmp_path, payload, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def analyze_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("analyze")
    assert main(["analyze", "--output-dir", str(out), "--seed", "7"]) == 0
    return out


def test_analyze_writes_every_figure(analyze_dir):
    expected = {
        "expected_attempts_vs_success.csv",
        "slo_attempts_vs_success.csv",
        "slo_attempts_vs_objective.csv",
        "path_success_vs_hops.csv",
        "path_success_vs_amount.csv",
        "expected_attempts_vs_amount.csv",
        "expected_attempts_split_curves.csv",
        "slo_attempts_vs_parts.csv",
        "mixed_success_vs_hops.csv",
        "break_even_amounts.csv",
    }
    assert expected <= {p.name for p in analyze_dir.iterdir()}


def test_analyze_slo_golden_row(analyze_dir):
    rows = read_csv(analyze_dir / "slo_attempts_vs_success.csv")
    match = [
        r for r in rows if r["success_prob"] == "0.5" and r["objective"] == "0.99"
    ]
    assert match and match[0]["attempts"] == "7"


def test_analyze_expectation_golden_row(analyze_dir):
    rows = read_csv(analyze_dir / "expected_attempts_vs_success.csv")
    match = [r for r in rows if r["success_prob"] == "0.1"]
    assert match and float(match[0]["expected_attempts"]) == 10.0


def test_analyze_parts_lower_bound(analyze_dir):
    for row in read_csv(analyze_dir / "slo_attempts_vs_parts.csv"):
        if row["attempts"]:
            assert int(row["attempts"]) >= int(row["parts"])


def test_analyze_headers_stable(analyze_dir):
    with open(analyze_dir / "expected_attempts_vs_success.csv", encoding="utf-8") as fh:
        fh.readline()
        assert fh.readline().rstrip("\n") == "success_prob,expected_attempts"
    with open(analyze_dir / "slo_attempts_vs_parts.csv", encoding="utf-8") as fh:
        fh.readline()
        assert fh.readline().rstrip("\n") == "amount_fraction,hops,parts,attempts"


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def small_sim_config(tmp_path, workers=1):
    return write_config(
        tmp_path,
        {
            "seed": 99,
            "mode": "static",
            "synthetic": {"kind": "kernel", "nodes": 25, "channels": 100},
            "pairs": 6,
            "amounts": {"min": 1, "max": 3, "step": 1, "unit": "mbtc"},
            "parts": [1],
            "workers": workers,
            "arms": [
                {"name": "baseline", "strategy": "baseline", "candidate_count": 200},
                {"name": "ml", "strategy": "max-likelihood", "candidate_count": 200},
            ],
        },
        name=f"sim_w{workers}.json",
    )


def test_simulate_outputs_and_determinism(tmp_path):
    cfg = small_sim_config(tmp_path)
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    assert main(["simulate", "--config", cfg, "--output-dir", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--output-dir", str(out2)]) == 0
    for name in ("results.csv", "summary.json"):
        assert file_hash(out1 / name) == file_hash(out2 / name)
    summary = json.loads((out1 / "summary.json").read_text())
    assert "reduction_percent" in summary["reductions"]["ml"]
    assert summary["arms"]["baseline"]["sessions"] == 18


def test_simulate_checksum_identical_across_worker_counts(tmp_path):
    out1, out4 = tmp_path / "w1", tmp_path / "w4"
    assert main(
        ["simulate", "--config", small_sim_config(tmp_path, 1), "--output-dir", str(out1)]
    ) == 0
    assert main(
        ["simulate", "--config", small_sim_config(tmp_path, 4), "--output-dir", str(out4)]
    ) == 0
    # workers are excluded from the config hash, so bytes must match exactly
    assert file_hash(out1 / "results.csv") == file_hash(out4 / "results.csv")
    assert file_hash(out1 / "summary.json") == file_hash(out4 / "summary.json")


def test_simulate_dynamic_validation_preset(tmp_path):
    capacity = 1_000_000
    cfg = write_config(
        tmp_path,
        {
            "seed": 5,
            "mode": "dynamic",
            "synthetic": {"kind": "chain", "uncertain_hops": 4, "capacity": capacity},
            "pairs": [["v0", "v5"]],
            "repeat_pairs": 20_000,
            "amounts": {"values": [0.1], "unit": "capacity-fraction"},
            "parts": [1],
            "max_attempts": 10_000,
            "arms": [{"name": "forced", "strategy": "baseline"}],
        },
    )
    out = tmp_path / "dyn"
    assert main(["simulate", "--config", cfg, "--output-dir", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    mean = summary["arms"]["forced"]["per_amount"]["0.1"]["mean_attempts"]
    expected = 1.0 / uniform_path_success(0.1 * capacity, capacity, 4)
    assert abs(mean - expected) / expected < 0.02
    assert summary["info_gain_semantics"].startswith("per_attempt")


def test_simulate_arm_filter(tmp_path):
    cfg = small_sim_config(tmp_path)
    out = tmp_path / "filtered"
    assert main(
        ["simulate", "--config", cfg, "--output-dir", str(out), "--arm", "baseline"]
    ) == 0
    rows = read_csv(out / "results.csv")
    assert {r["arm"] for r in rows} == {"baseline"}


# ---------------------------------------------------------------------------
# infogain
# ---------------------------------------------------------------------------


def test_infogain_collapses_at_capacity(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "seed": 31,
            "mode": "static",
            "synthetic": {"kind": "kernel-constant", "capacity": 10_000,
                           "nodes": 25, "channels": 100},
            "pairs": 12,
            "amounts": {"values": [0.05, 0.5, 1.0], "unit": "capacity-fraction"},
            "parts": [1],
            "max_attempts": 100,
            "arms": [{"name": "probe", "strategy": "baseline", "candidate_count": 200}],
        },
    )
    out = tmp_path / "ig"
    assert main(["infogain", "--config", cfg, "--output-dir", str(out)]) == 0
    rows = read_csv(out / "infogain_median.csv")
    medians = {r["amount"]: float(r["median_session_gain_nats"]) for r in rows}
    assert medians["0.5"] > medians["0.05"] > 0.0
    assert medians["1.0"] < 0.25 * medians["0.5"]


# ---------------------------------------------------------------------------
# graph construction from config
# ---------------------------------------------------------------------------


def test_prior_pattern_overrides(tmp_path):
    from pcnsim.cli import _build_graph
    from pcnsim.config import ExperimentConfig
    from pcnsim.model import Bimodal, Uniform

    graph_file = write_config(
        tmp_path,
        {
            "nodes": [{"id": "A"}, {"id": "B"}, {"id": "C"}],
            "channels": [
                {"id": "edge1", "node_a": "A", "node_b": "B", "capacity": 100},
                {"id": "edge2", "node_a": "B", "node_b": "C", "capacity": 100},
                {"id": "other", "node_a": "A", "node_b": "C", "capacity": 100},
            ],
        },
        name="pat_graph.json",
    )
    config = ExperimentConfig.from_dict(
        {
            "seed": 1,
            "graph": graph_file,
            "priors": {"edge*": {"type": "bimodal", "low_side_prob": 0.25}},
            "amounts": {"min": 1, "max": 1, "step": 1},
        }
    )
    g = _build_graph(config)
    assert g.channel("edge1").prior == Bimodal(100, 0.25)
    assert g.channel("edge2").prior == Bimodal(100, 0.25)
    assert g.channel("other").prior == Uniform(100)


# ---------------------------------------------------------------------------
# rebalance
# ---------------------------------------------------------------------------


def test_rebalance_cli_roundtrip(tmp_path):
    snap = tmp_path / "snap.json"
    assert main(
        [
            "gen-snapshot", "--seed", "17", "--nodes", "30", "--channels", "120",
            "--with-balances", "--output", str(snap),
        ]
    ) == 0
    out = tmp_path / "rebalanced.json"
    hist = tmp_path / "hist.csv"
    assert main(
        ["rebalance", "--graph", str(snap), "--output", str(out),
         "--histogram", str(hist)]
    ) == 0

    def load(path):
        return json.loads(Path(path).read_text())

    before, after = load(snap), load(out)

    def node_sums(payload):
        sums = {}
        for ch in payload["channels"]:
            sums[ch["node_a"]] = sums.get(ch["node_a"], 0) + ch["balance"]
            sums[ch["node_b"]] = sums.get(ch["node_b"], 0) + ch["capacity"] - ch["balance"]
        return sums

    assert node_sums(before) == node_sums(after)

    def ratio_variance(payload):
        ratios = [ch["balance"] / ch["capacity"] for ch in payload["channels"]]
        mean = sum(ratios) / len(ratios)
        return sum((r - mean) ** 2 for r in ratios) / len(ratios)

    assert ratio_variance(after) < ratio_variance(before)

    with open(hist, newline="", encoding="utf-8") as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    assert len(rows) == 20
    assert sum(int(r["before_count"]) for r in rows) == 120


def test_rebalance_balanced_input_unchanged(tmp_path):
    payload = {
        "nodes": [{"id": "A"}, {"id": "B"}, {"id": "C"}],
        "channels": [
            {"id": "ab", "node_a": "A", "node_b": "B", "capacity": 100, "balance": 50},
            {"id": "bc", "node_a": "B", "node_b": "C", "capacity": 100, "balance": 50},
            {"id": "ca", "node_a": "C", "node_b": "A", "capacity": 100, "balance": 50},
        ],
    }
    snap = tmp_path / "balanced.json"
    snap.write_text(json.dumps(payload))
    out = tmp_path / "balanced_out.json"
    assert main(["rebalance", "--graph", str(snap), "--output", str(out)]) == 0
    result = json.loads(out.read_text())
    assert {ch["id"]: ch["balance"] for ch in result["channels"]} == {
        "ab": 50, "bc": 50, "ca": 50,
    }


def test_rebalance_requires_balances(tmp_path):
    payload = {
        "nodes": [{"id": "A"}, {"id": "B"}],
        "channels": [{"id": "ab", "node_a": "A", "node_b": "B", "capacity": 100}],
    }
    snap = tmp_path / "nobal.json"
    snap.write_text(json.dumps(payload))
    code = main(["rebalance", "--graph", str(snap), "--output", str(tmp_path / "o.json")])
    assert code == 3


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_exit_code_config_error(tmp_path):
    cfg = write_config(tmp_path, {"mode": "static"})  # seed missing
    assert main(["simulate", "--config", cfg, "--output-dir", str(tmp_path)]) == 2


def test_exit_code_missing_graph(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "seed": 1,
            "graph": str(tmp_path / "missing.json"),
            "pairs": 1,
            "amounts": {"min": 1, "max": 1, "step": 1},
        },
    )
    assert main(["simulate", "--config", cfg, "--output-dir", str(tmp_path)]) == 3


def test_exit_code_unknown_arm(tmp_path):
    cfg = small_sim_config(tmp_path)
    code = main(
        ["simulate", "--config", cfg, "--output-dir", str(tmp_path / "x"),
         "--arm", "nonexistent"]
    )
    assert code == 2
