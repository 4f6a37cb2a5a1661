"""Reliability-aware server aggregation.

Each client's contribution is scored by its effective reliable
information (sample count times quality). A round-dependent trust
annealing factor interpolates the score from fully quality-aware toward
plain sample-size weighting as the federation matures; a temperature
exponent then turns scores into normalized weights.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .learner import ModelParams

log = logging.getLogger(__name__)

AGGREGATION_MODES = ("fedqual", "fedavg", "quality_only")
ANNEAL_SCHEDULES = ("linear", "always_zero", "always_one")

WEIGHT_SUM_ATOL = 1e-9


@dataclass(frozen=True)
class AggregationConfig:
    gamma_temp: float = 1.0        # inverse temperature of the soft weighting
    anneal_warmup_rounds: int = 1  # rounds until trust fully shifts to sample size
    mode: str = "fedqual"
    schedule: str = "linear"

    def __post_init__(self) -> None:
        if self.gamma_temp <= 0:
            raise ValueError(f"gamma_temp must be positive, got {self.gamma_temp}")
        if self.anneal_warmup_rounds < 1:
            raise ValueError(
                f"anneal_warmup_rounds must be at least 1, got {self.anneal_warmup_rounds}"
            )
        if self.mode not in AGGREGATION_MODES:
            raise ValueError(f"unknown aggregation mode {self.mode!r}")
        if self.schedule not in ANNEAL_SCHEDULES:
            raise ValueError(f"unknown anneal schedule {self.schedule!r}")


@dataclass(frozen=True)
class ClientSummary:
    """What the server knows about one client's round: size, quality, params."""

    client_id: int
    sample_count: int
    quality: float
    params: ModelParams

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be positive, got {self.sample_count}")
        if self.quality < 0:
            raise ValueError(f"quality must be nonnegative, got {self.quality}")


def effective_info(sample_count: int, quality: float) -> float:
    """Effective reliable information: sample count discounted by quality."""
    if sample_count < 1:
        raise ValueError(f"sample_count must be positive, got {sample_count}")
    if quality < 0:
        raise ValueError(f"quality must be nonnegative, got {quality}")
    return float(sample_count) * float(quality)


def annealed_score(sample_count: int, quality: float, rho_t: float) -> float:
    """Trust-annealed score: N * q^(1 - rho).

    Equals N*q at rho 0 (fully quality-aware) and exactly N at rho 1
    (sample-size weighting). A zero-quality client scores 0 for any
    rho < 1 (limit convention) and is flagged in the log.
    """
    if not 0 <= rho_t <= 1:
        raise ValueError(f"rho_t must be in [0, 1], got {rho_t}")
    if rho_t >= 1.0:
        return float(sample_count)
    if quality == 0:
        log.warning("client with zero quality scores 0 at rho=%g", rho_t)
        return 0.0
    if rho_t == 0.0:
        return effective_info(sample_count, quality)
    return float(sample_count) * float(quality) ** (1.0 - rho_t)


def anneal_schedule(round_index: int, cfg: AggregationConfig) -> float:
    """Trust annealing factor for the round, nondecreasing from 0 to 1."""
    if round_index < 0:
        raise ValueError(f"round index must be nonnegative, got {round_index}")
    if cfg.schedule == "always_zero":
        return 0.0
    if cfg.schedule == "always_one":
        return 1.0
    return min(1.0, round_index / cfg.anneal_warmup_rounds)


def soft_weights(scores, gamma: float) -> np.ndarray:
    """Normalize scores to weights proportional to score**gamma.

    For gamma != 1 the powers are taken in log space with a stabilized
    exponential-normalize, so large scores cannot overflow. Zero scores
    get weight 0; if every score is 0 the weights fall back to uniform
    and a warning is logged.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError(f"scores must be a nonempty 1-D sequence, got shape {s.shape}")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite and nonnegative")
    if not np.any(s > 0):
        log.warning("all aggregation scores are zero; falling back to uniform weights")
        return np.full(s.size, 1.0 / s.size)
    if gamma == 1.0:
        # direct normalization keeps the sample-size endpoint exact
        return s / s.sum()
    with np.errstate(divide="ignore"):
        logs = gamma * np.log(s)
    w = np.exp(logs - logs.max())
    return w / w.sum()


def aggregate(summaries, weights) -> ModelParams:
    """Convex combination of client parameters.

    Summation runs in ascending client-id order regardless of the input
    order, so the result is bitwise independent of arrival order.
    """
    if len(summaries) != len(weights):
        raise ValueError(
            f"{len(summaries)} summaries but {len(weights)} weights"
        )
    if not summaries:
        raise ValueError("nothing to aggregate")
    w = np.asarray(weights, dtype=np.float64)
    if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_ATOL:
        raise ValueError(f"weights sum to {float(w.sum())}, expected 1")
    shape = summaries[0].params.weights.shape
    for s in summaries:
        if s.params.weights.shape != shape:
            raise ValueError("mismatched parameter shapes across clients")
    acc_w = np.zeros(shape)
    acc_b = np.zeros(shape[0])
    for s, wm in sorted(zip(summaries, w), key=lambda pair: pair[0].client_id):
        acc_w += wm * s.params.weights
        acc_b += wm * s.params.bias
    return ModelParams(acc_w, acc_b)


def effective_rho(round_index: int, cfg: AggregationConfig) -> float:
    """Annealing factor actually in force for the round, per mode."""
    if cfg.mode == "fedavg":
        return 1.0
    if cfg.mode == "quality_only":
        return 0.0
    return anneal_schedule(round_index, cfg)


def round_weights(summaries, round_index: int, cfg: AggregationConfig) -> np.ndarray:
    """Aggregation weights for the round, aligned with ``summaries``."""
    counts = np.array([float(s.sample_count) for s in summaries])
    if cfg.mode == "fedavg":
        return counts / counts.sum()
    if cfg.mode == "quality_only":
        scores = [effective_info(s.sample_count, s.quality) for s in summaries]
        return soft_weights(scores, cfg.gamma_temp)
    rho = anneal_schedule(round_index, cfg)
    scores = [annealed_score(s.sample_count, s.quality, rho) for s in summaries]
    return soft_weights(scores, cfg.gamma_temp)
