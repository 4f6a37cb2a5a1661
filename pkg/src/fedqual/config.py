"""Run configuration: one document holding every knob of a federation run.

Config files are JSON mirroring the field names below. Unknown keys are
rejected so sweep typos cannot pass silently.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .aggregation import AggregationConfig
from .calibration import CalibrationConfig
from .data import PartitionConfig
from .errors import ConfigError
from .learner import LocalTrainConfig

ALGORITHMS = ("fedqual", "fedavg", "fedprox", "fedqagg", "fedqrect")


@dataclass(frozen=True)
class FederationConfig:
    rounds: int = 100
    participation: float = 0.3
    algorithm: str = "fedqual"
    local: LocalTrainConfig = field(default_factory=LocalTrainConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    aggregation: AggregationConfig | None = None  # warmup defaults to rounds / 2
    data: PartitionConfig = field(default_factory=PartitionConfig)
    eval_fraction: float = 0.5
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.rounds < 0:
            raise ConfigError(f"rounds must be nonnegative, got {self.rounds}")
        if not 0 < self.participation <= 1:
            raise ConfigError(f"participation must be in (0, 1], got {self.participation}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if not 0 < self.eval_fraction < 1:
            raise ConfigError(f"eval_fraction must be in (0, 1), got {self.eval_fraction}")
        if self.aggregation is None:
            warmup = max(1, self.rounds // 2)
            object.__setattr__(self, "aggregation", AggregationConfig(anneal_warmup_rounds=warmup))


def _check_keys(payload: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")


def _build(cls, payload: dict, where: str):
    _check_keys(payload, {f.name for f in fields(cls)}, where)
    try:
        return cls(**payload)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def config_from_dict(payload: dict) -> FederationConfig:
    """Build a validated FederationConfig from a plain dict."""
    if not isinstance(payload, dict):
        raise ConfigError("config document must be a JSON object")
    allowed = {
        "rounds", "participation", "algorithm", "local", "calibration",
        "aggregation", "data", "eval_fraction", "master_seed",
    }
    _check_keys(payload, allowed, "config")
    kwargs: dict = {k: v for k, v in payload.items()
                    if k not in ("local", "calibration", "aggregation", "data")}
    kwargs["local"] = _build(LocalTrainConfig, dict(payload.get("local", {})), "local")
    kwargs["calibration"] = _build(
        CalibrationConfig, dict(payload.get("calibration", {})), "calibration"
    )
    kwargs["data"] = _build(PartitionConfig, dict(payload.get("data", {})), "data")
    agg_payload = dict(payload.get("aggregation", {}))
    if "mode" in agg_payload:
        raise ConfigError("aggregation.mode is derived from the algorithm; remove it")
    if agg_payload:
        rounds = int(payload.get("rounds", FederationConfig.rounds))
        agg_payload.setdefault("anneal_warmup_rounds", max(1, rounds // 2))
        kwargs["aggregation"] = _build(AggregationConfig, agg_payload, "aggregation")
    try:
        return FederationConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> FederationConfig:
    """Load and validate a JSON run configuration."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(payload)
