"""Experiment configuration: schema, validation, TOML/JSON loading.

Configs are plain dicts on disk; this module validates them into dataclasses
and provides the canonical hash stamped into every output file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .model import Bimodal, Degenerate, Mixed, NormalTruncated, Uniform

__all__ = [
    "ConfigError",
    "AmountGrid",
    "ArmConfig",
    "ExperimentConfig",
    "prior_factory_from_spec",
    "SATOSHI_PER_MBTC",
]

SATOSHI_PER_MBTC = 100_000

_STRATEGIES = ("baseline", "max-likelihood")
_UNITS = ("satoshi", "mbtc", "capacity-fraction")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


def _require(condition, path, message):
    if not condition:
        raise ConfigError(f"{path}: {message}")


def prior_factory_from_spec(spec, path="prior"):
    """Turn a prior spec dict into capacity -> BalanceDistribution."""
    _require(isinstance(spec, dict), path, "must be an object")
    kind = spec.get("type")
    if kind == "uniform":
        return Uniform
    if kind == "bimodal":
        p = float(spec.get("low_side_prob", 0.5))
        _require(0.0 <= p <= 1.0, f"{path}.low_side_prob", "must be in [0, 1]")
        return lambda c: Bimodal(c, p)
    if kind == "normal":
        mean_frac = float(spec.get("mean_frac", 0.5))
        stddev_frac = float(spec.get("stddev_frac", 0.1))
        _require(stddev_frac > 0.0, f"{path}.stddev_frac", "must be positive")
        return lambda c: NormalTruncated(c, mean=mean_frac * c, stddev=stddev_frac * c)
    if kind == "mixed":
        p = float(spec.get("p_bimodal", 0.3))
        _require(0.0 <= p <= 1.0, f"{path}.p_bimodal", "must be in [0, 1]")
        return lambda c: Mixed(c, p)
    if kind == "known":
        _require("balance" in spec, f"{path}.balance", "required for type 'known'")
        balance = int(spec["balance"])

        def factory(c):
            _require(
                0 <= balance <= c, f"{path}.balance",
                f"balance {balance} outside [0, {c}]",
            )
            return Degenerate(c, balance)

        return factory
    raise ConfigError(
        f"{path}.type: unknown prior type {kind!r} "
        f"(expected uniform|bimodal|normal|mixed|known)"
    )


@dataclass(frozen=True)
class AmountGrid:
    unit: str
    values: tuple  # raw grid values in the configured unit

    @classmethod
    def from_dict(cls, raw, path="amounts"):
        _require(isinstance(raw, dict), path, "must be an object")
        unit = raw.get("unit", "satoshi")
        _require(unit in _UNITS, f"{path}.unit", f"must be one of {_UNITS}")
        if "values" in raw:
            values = tuple(raw["values"])
        else:
            for key in ("min", "max", "step"):
                _require(key in raw, f"{path}.{key}", "required")
            lo, hi, step = raw["min"], raw["max"], raw["step"]
            _require(step > 0, f"{path}.step", "must be positive")
            values = []
            v = lo
            while v <= hi + 1e-12:
                values.append(round(v, 10))
                v += step
            values = tuple(values)
        _require(len(values) > 0, path, "grid is empty")
        _require(all(v > 0 for v in values), path, "amounts must be positive")
        return cls(unit, values)

    def resolve(self, constant_capacity=None):
        """(label, satoshi) pairs; fraction grids need a constant capacity."""
        if self.unit == "satoshi":
            return [(v, int(v)) for v in self.values]
        if self.unit == "mbtc":
            return [(v, int(round(v * SATOSHI_PER_MBTC))) for v in self.values]
        if constant_capacity is None:
            raise ConfigError(
                "amounts.unit: capacity-fraction grids need a constant-capacity graph"
            )
        return [
            (v, max(1, int(round(v * constant_capacity)))) for v in self.values
        ]


@dataclass(frozen=True)
class ArmConfig:
    name: str
    strategy: str = "baseline"
    candidate_count: int = 1000
    rebalance: bool = False
    prior: dict | None = None

    @classmethod
    def from_dict(cls, raw, path):
        _require(isinstance(raw, dict), path, "must be an object")
        name = raw.get("name")
        _require(bool(name), f"{path}.name", "required")
        strategy = raw.get("strategy", "baseline")
        _require(
            strategy in _STRATEGIES, f"{path}.strategy", f"must be one of {_STRATEGIES}"
        )
        count = int(raw.get("candidate_count", 1000))
        _require(count >= 1, f"{path}.candidate_count", "must be >= 1")
        prior = raw.get("prior")
        if prior is not None:
            prior_factory_from_spec(prior, f"{path}.prior")  # validate eagerly
        return cls(name, strategy, count, bool(raw.get("rebalance", False)), prior)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    mode: str = "static"
    graph_path: str | None = None
    synthetic: dict | None = None
    trust_balances: bool = False
    prior: dict = field(default_factory=lambda: {"type": "uniform"})
    priors: dict = field(default_factory=dict)
    pairs: object = 100
    repeat_pairs: int = 1
    amounts: AmountGrid = None
    parts: tuple = (1,)
    slo: float = 0.999
    max_attempts: int = 200
    workers: int = 1
    output_dir: str = "out"
    arms: tuple = ()
    rebalance_tolerance: float = 1e-6
    rebalance_max_iterations: int = 20_000

    @classmethod
    def from_dict(cls, raw):
        _require(isinstance(raw, dict), "config", "must be an object")
        _require("seed" in raw, "seed", "required (runs carry no implicit entropy)")
        seed = int(raw["seed"])
        mode = raw.get("mode", "static")
        _require(mode in ("static", "dynamic"), "mode", "must be static|dynamic")

        graph_path = raw.get("graph")
        synthetic = raw.get("synthetic")
        _require(
            (graph_path is None) != (synthetic is None),
            "graph/synthetic", "configure exactly one graph source",
        )

        prior = raw.get("prior", {"type": "uniform"})
        prior_factory_from_spec(prior, "prior")
        priors = raw.get("priors", {})
        _require(isinstance(priors, dict), "priors", "must map patterns to specs")
        for pattern, spec in priors.items():
            prior_factory_from_spec(spec, f"priors[{pattern!r}]")

        pairs = raw.get("pairs", 100)
        if isinstance(pairs, int):
            _require(pairs >= 1, "pairs", "must be >= 1")
        else:
            _require(
                isinstance(pairs, list) and pairs, "pairs",
                "must be a count or a non-empty list of [sender, receiver]",
            )
            pairs = [tuple(map(str, p)) for p in pairs]
            for i, (a, b) in enumerate(pairs):
                _require(a != b, f"pairs[{i}]", "sender equals receiver")

        repeat_pairs = int(raw.get("repeat_pairs", 1))
        _require(repeat_pairs >= 1, "repeat_pairs", "must be >= 1")

        amounts = AmountGrid.from_dict(raw.get("amounts", {}), "amounts")
        parts = tuple(int(p) for p in raw.get("parts", [1]))
        _require(
            parts and all(p >= 1 for p in parts), "parts", "needs part counts >= 1"
        )
        slo = float(raw.get("slo", 0.999))
        _require(0.0 <= slo < 1.0, "slo", "must be in [0, 1)")
        max_attempts = int(raw.get("max_attempts", 200))
        _require(max_attempts >= max(parts), "max_attempts", "below the part count")
        workers = int(raw.get("workers", 1))
        _require(workers >= 1, "workers", "must be >= 1")

        arms_raw = raw.get("arms", [{"name": "baseline", "strategy": "baseline"}])
        arms = tuple(
            ArmConfig.from_dict(a, f"arms[{i}]") for i, a in enumerate(arms_raw)
        )
        names = [a.name for a in arms]
        _require(len(set(names)) == len(names), "arms", "arm names must be unique")

        reb = raw.get("rebalance", {})
        _require(isinstance(reb, dict), "rebalance", "must be an object")

        return cls(
            seed=seed,
            mode=mode,
            graph_path=graph_path,
            synthetic=synthetic,
            trust_balances=bool(raw.get("trust_balances", False)),
            prior=prior,
            priors=priors,
            pairs=pairs,
            repeat_pairs=repeat_pairs,
            amounts=amounts,
            parts=parts,
            slo=slo,
            max_attempts=max_attempts,
            workers=workers,
            output_dir=str(raw.get("output_dir", "out")),
            arms=arms,
            rebalance_tolerance=float(reb.get("tolerance", 1e-6)),
            rebalance_max_iterations=int(reb.get("max_iterations", 20_000)),
        )

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if path.suffix.lower() == ".toml":
            try:
                import tomllib  # Python >= 3.11
            except ModuleNotFoundError:
                import tomli as tomllib
            try:
                raw = tomllib.loads(text)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
        else:
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def canonical_dict(self) -> dict:
        return {
            "seed": self.seed,
            "mode": self.mode,
            "graph": self.graph_path,
            "synthetic": self.synthetic,
            "trust_balances": self.trust_balances,
            "prior": self.prior,
            "priors": self.priors,
            "pairs": self.pairs if isinstance(self.pairs, int) else list(map(list, self.pairs)),
            "repeat_pairs": self.repeat_pairs,
            "amounts": {"unit": self.amounts.unit, "values": list(self.amounts.values)},
            "parts": list(self.parts),
            "slo": self.slo,
            "max_attempts": self.max_attempts,
            "arms": [
                {
                    "name": a.name,
                    "strategy": a.strategy,
                    "candidate_count": a.candidate_count,
                    "rebalance": a.rebalance,
                    "prior": a.prior,
                }
                for a in self.arms
            ],
            "rebalance": {
                "tolerance": self.rebalance_tolerance,
                "max_iterations": self.rebalance_max_iterations,
            },
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
