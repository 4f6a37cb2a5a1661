"""Federated training orchestration.

One round: broadcast the global model, train the selected clients
locally against the frozen anchor, reweight their updates by reliability,
aggregate, and evaluate the new global model on held-out examples whose
targets are the latent ground truth (never the noisy observations).
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import seeding
from .aggregation import (
    AggregationConfig,
    ClientSummary,
    aggregate,
    effective_rho,
    round_weights,
)
from .calibration import compute_alpha
from .config import ALGORITHMS, FederationConfig
from .data import FederationData, build_federation_data
from .errors import ConfigError
from .learner import ModelParams, local_train, softmax
from .metrics import MetricReport, mean_report

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlgorithmProfile:
    """The three switches that fully determine an algorithm's behavior."""

    uses_calibration: bool
    server_mode: str
    prox_mu: float


def algorithm_profile(name: str, prox_mu: float = 0.01) -> AlgorithmProfile:
    """Map an algorithm name to its client/server switches.

    ``prox_mu`` only takes effect for fedprox; every other algorithm
    trains without the proximal term.
    """
    if name == "fedavg":
        return AlgorithmProfile(False, "fedavg", 0.0)
    if name == "fedprox":
        return AlgorithmProfile(False, "fedavg", prox_mu)
    if name == "fedqagg":
        return AlgorithmProfile(False, "quality_only", 0.0)
    if name == "fedqrect":
        return AlgorithmProfile(True, "fedavg", 0.0)
    if name == "fedqual":
        return AlgorithmProfile(True, "fedqual", 0.0)
    raise ConfigError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")


@dataclass(frozen=True)
class RoundReport:
    """One row of run output: who trained, with what weight, scored how."""

    round_index: int
    selected: tuple[int, ...]
    rho: float
    weights: dict[int, float]
    metrics: MetricReport
    wall_seconds: float


@dataclass(frozen=True)
class FederationRun:
    reports: list[RoundReport]
    global_params: ModelParams
    param_history: list[ModelParams] | None = None


def select_clients(
    num_clients: int,
    participation: float,
    round_index: int,
    master_seed: int,
) -> list[int]:
    """Pick ceil(participation * M) distinct clients, uniformly, in id order.

    The draw depends only on (master seed, round index), never on what
    happened in earlier rounds.
    """
    if not 0 < participation <= 1:
        raise ConfigError(f"participation must be in (0, 1], got {participation}")
    count = min(num_clients, max(1, math.ceil(participation * num_clients)))
    if count == num_clients:
        return list(range(num_clients))
    rng = seeding.stream(seeding.TAG_SELECT, master_seed, round_index)
    chosen = rng.choice(num_clients, size=count, replace=False)
    return sorted(int(i) for i in chosen)


def _evaluate(params: ModelParams, data: FederationData) -> MetricReport:
    logits = data.eval_features @ params.weights.T + params.bias
    predictions = softmax(logits)
    return mean_report(data.eval_targets, predictions)


def run_federation(
    cfg: FederationConfig,
    *,
    profile: AlgorithmProfile | None = None,
    workers: int = 1,
    record_params: bool = False,
    data: FederationData | None = None,
) -> FederationRun:
    """Run the full protocol for ``cfg.rounds`` rounds.

    ``profile`` overrides the switches derived from ``cfg.algorithm``
    (used for ablations). ``workers`` > 1 trains selected clients in a
    thread pool; results land in a slot array indexed by client id, so
    scheduling cannot change the outcome.
    """
    if profile is None:
        profile = algorithm_profile(cfg.algorithm, cfg.local.prox_mu)
    if data is None:
        data = build_federation_data(cfg.data, cfg.eval_fraction, cfg.master_seed)
    shards = data.shards
    num_clients = len(shards)

    alphas = [
        compute_alpha(shard.quality, cfg.calibration) if profile.uses_calibration else 0.0
        for shard in shards
    ]
    agg_cfg: AggregationConfig = replace(cfg.aggregation, mode=profile.server_mode)

    global_params = ModelParams.zeros(cfg.data.num_classes, cfg.data.num_features)
    reports: list[RoundReport] = []
    history: list[ModelParams] | None = [] if record_params else None

    for t in range(cfg.rounds):
        started = time.perf_counter()
        selected = select_clients(num_clients, cfg.participation, t, cfg.master_seed)

        def train_one(client_id: int) -> ModelParams:
            local_cfg = replace(cfg.local, alpha=alphas[client_id], prox_mu=profile.prox_mu)
            rng = seeding.stream(seeding.TAG_TRAIN, cfg.master_seed, t, client_id)
            return local_train(global_params, global_params, shards[client_id], local_cfg, rng)

        slots: dict[int, ModelParams] = {}
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for client_id, params in zip(selected, pool.map(train_one, selected)):
                    slots[client_id] = params
        else:
            for client_id in selected:
                slots[client_id] = train_one(client_id)

        summaries = [
            ClientSummary(
                client_id=client_id,
                sample_count=shards[client_id].sample_count,
                quality=shards[client_id].quality,
                params=slots[client_id],
            )
            for client_id in selected
        ]
        weights = round_weights(summaries, t, agg_cfg)
        global_params = aggregate(summaries, weights)
        if history is not None:
            history.append(global_params)

        report = RoundReport(
            round_index=t,
            selected=tuple(selected),
            rho=effective_rho(t, agg_cfg),
            weights={cid: float(w) for cid, w in zip(selected, weights)},
            metrics=_evaluate(global_params, data),
            wall_seconds=time.perf_counter() - started,
        )
        reports.append(report)
        log.info(
            "round %d: kl=%.6f intersection=%.4f (%.3fs)",
            t, report.metrics.kl, report.metrics.intersection, report.wall_seconds,
        )

    return FederationRun(reports=reports, global_params=global_params, param_history=history)


SWEEP_AXES = ("q", "rho_noise", "gamma_dirichlet", "top_k", "pool_size", "rho_online")


def apply_axis(cfg: FederationConfig, axis: str, value) -> FederationConfig:
    """Return a copy of the config with one sweep knob replaced."""
    if axis == "q":
        return replace(cfg, data=replace(cfg.data, noisy_annotators=int(value)))
    if axis == "rho_noise":
        return replace(cfg, data=replace(cfg.data, noise_ratio=float(value)))
    if axis == "gamma_dirichlet":
        return replace(cfg, data=replace(cfg.data, dirichlet_gamma=float(value)))
    if axis == "top_k":
        return replace(cfg, data=replace(cfg.data, top_k=int(value)))
    if axis == "pool_size":
        return replace(cfg, data=replace(cfg.data, num_clients=int(value)))
    if axis == "rho_online":
        return replace(cfg, participation=float(value))
    raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(
    cfg: FederationConfig,
    axis: str,
    values,
    *,
    workers: int = 1,
) -> list[tuple[object, FederationRun]]:
    """Run the configured algorithm once per axis value, same master seed."""
    if not values:
        raise ConfigError("sweep needs at least one value")
    results = []
    for value in values:
        run = run_federation(apply_axis(cfg, axis, value), workers=workers)
        results.append((value, run))
    return results
