"""Synthetic federation data.

Latent ground-truth label distributions are drawn from a Dirichlet prior;
features are a fixed random linear embedding of the latent distribution
plus Gaussian noise, so they carry recoverable signal. Observed targets
are produced by simulated annotator ensembles whose size controls
supervision quality. Clients receive non-IID shards through per-class
Dirichlet allocation keyed on the top-K support of the latent truth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import seeding
from .errors import ConfigError
from .learner import Example
from .metrics import validate_distribution

VOTE_NORM_EPS = 1e-8

IQA_LEVELS = np.arange(1.0, 6.0)


@dataclass(frozen=True)
class PartitionConfig:
    """Everything that shapes the synthetic federation's data."""

    num_clients: int = 10
    num_examples: int = 2000
    num_classes: int = 5
    num_features: int = 16
    dirichlet_gamma: float = 0.25  # lower = more label skew across clients
    top_k: int = 1                 # support size used to key the partition
    noise_ratio: float = 0.5       # fraction of clients given the noisy annotator count
    clean_annotators: int = 10
    noisy_annotators: int = 2
    seed: int = 0
    gt_concentration: float = 0.7  # Dirichlet concentration of the latent truth
    feature_noise_var: float = 0.1

    def __post_init__(self) -> None:
        if self.num_clients < 1:
            raise ConfigError(f"num_clients must be positive, got {self.num_clients}")
        if self.num_examples < 1:
            raise ConfigError(f"num_examples must be positive, got {self.num_examples}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be at least 2, got {self.num_classes}")
        if self.num_features < 1:
            raise ConfigError(f"num_features must be positive, got {self.num_features}")
        if self.dirichlet_gamma <= 0:
            raise ConfigError(f"dirichlet_gamma must be positive, got {self.dirichlet_gamma}")
        if not 1 <= self.top_k <= self.num_classes:
            raise ConfigError(f"top_k must be in [1, {self.num_classes}], got {self.top_k}")
        if not 0 <= self.noise_ratio <= 1:
            raise ConfigError(f"noise_ratio must be in [0, 1], got {self.noise_ratio}")
        if self.clean_annotators < 1 or self.noisy_annotators < 1:
            raise ConfigError("annotator counts must be positive")
        if self.gt_concentration <= 0:
            raise ConfigError(f"gt_concentration must be positive, got {self.gt_concentration}")
        if self.feature_noise_var < 0:
            raise ConfigError(f"feature_noise_var must be nonnegative, got {self.feature_noise_var}")


@dataclass(frozen=True)
class GroundTruthExample:
    features: np.ndarray
    d_gt: np.ndarray
    primary_labels: frozenset[int]


@dataclass(frozen=True)
class ClientShard:
    """One client's local data plus its quality indicator."""

    client_id: int
    features: np.ndarray  # (n, num_features)
    targets: np.ndarray   # (n, num_classes) observed noisy supervision
    latent: np.ndarray    # (n, num_classes) latent ground truth
    quality: float

    @property
    def sample_count(self) -> int:
        return self.features.shape[0]

    @property
    def examples(self) -> list[Example]:
        return [Example(self.features[i], self.targets[i]) for i in range(self.sample_count)]


@dataclass(frozen=True)
class FederationData:
    shards: list[ClientShard]
    eval_features: np.ndarray
    eval_targets: np.ndarray  # latent ground truth, never the noisy observations


def top_k_support(d_gt, k: int) -> frozenset[int]:
    """Indices of the k largest entries; ties broken by lowest index."""
    d = np.asarray(d_gt, dtype=np.float64)
    if not 1 <= k <= d.size:
        raise ValueError(f"k must be in [1, {d.size}], got {k}")
    order = np.argsort(-d, kind="stable")
    return frozenset(int(i) for i in order[:k])


def generate_ground_truth(
    count: int,
    num_classes: int,
    num_features: int,
    rng: np.random.Generator,
    *,
    top_k: int = 1,
    concentration: float = 0.7,
    feature_noise_var: float = 0.1,
    embedding: np.ndarray | None = None,
) -> list[GroundTruthExample]:
    """Draw latent distributions and matching feature vectors.

    The embedding matrix is drawn once per generator (or injected for
    tests); features are embedding @ d_gt plus Gaussian noise.
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    if embedding is None:
        embedding = rng.normal(size=(num_features, num_classes))
    elif embedding.shape != (num_features, num_classes):
        raise ValueError(f"embedding shape {embedding.shape} does not match "
                         f"({num_features}, {num_classes})")
    latent = rng.dirichlet(np.full(num_classes, concentration), size=count)
    noise = rng.normal(0.0, math.sqrt(feature_noise_var), size=(count, num_features))
    features = latent @ embedding.T + noise
    return [
        GroundTruthExample(features[i], latent[i], top_k_support(latent[i], top_k))
        for i in range(count)
    ]


def votes_to_distribution(counts) -> np.ndarray:
    """L1-normalize a vote tally with a small stabilizer, then renormalize."""
    v = np.asarray(counts, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("vote counts must be nonnegative")
    total = v.sum()
    if total <= 0:
        raise ValueError("vote tally is empty")
    u = v / (total + VOTE_NORM_EPS)
    return u / u.sum()


def simulate_fer_annotators(d_gt, num_annotators: int, rng: np.random.Generator) -> np.ndarray:
    """Observed distribution from ``num_annotators`` categorical votes.

    Each simulated expert casts one vote drawn from the latent truth; the
    tally is L1-normalized. More annotators means a closer match to the
    latent distribution.
    """
    if num_annotators < 1:
        raise ValueError(f"need at least one annotator, got {num_annotators}")
    d = np.asarray(d_gt, dtype=np.float64)
    prob = d / d.sum()
    votes = rng.choice(d.size, size=num_annotators, p=prob)
    counts = np.bincount(votes, minlength=d.size).astype(np.float64)
    return votes_to_distribution(counts)


def score_to_soft_vote(score: float) -> np.ndarray:
    """Interpolated vote of one scalar score onto the five quality levels.

    A score contributes 1 - |score - level| to each integer level less
    than one unit away; the vote vector always sums to one.
    """
    if not 1.0 <= score <= 5.0:
        raise ValueError(f"score must be in [1, 5], got {score}")
    w = np.clip(1.0 - np.abs(score - IQA_LEVELS), 0.0, None)
    return w / w.sum()


def simulate_iqa_annotators(
    true_score: float,
    num_annotators: int,
    rng: np.random.Generator,
    score_noise_var: float = 0.5,
) -> np.ndarray:
    """Observed 5-bin distribution from noisy per-expert scalar scores."""
    if not 1.0 <= true_score <= 5.0:
        raise ValueError(f"true_score must be in [1, 5], got {true_score}")
    if num_annotators < 1:
        raise ValueError(f"need at least one annotator, got {num_annotators}")
    scores = true_score + rng.normal(0.0, math.sqrt(score_noise_var), size=num_annotators)
    scores = np.clip(scores, 1.0, 5.0)
    votes = np.zeros(5)
    for s in scores:
        votes += score_to_soft_vote(float(s))
    return votes / votes.sum()


def _largest_remainder(total: int, proportions: np.ndarray) -> np.ndarray:
    raw = proportions * total
    base = np.floor(raw).astype(int)
    remaining = total - int(base.sum())
    frac = raw - base
    # largest fractional parts win the leftovers; ties to the lower index
    order = np.lexsort((np.arange(frac.size), -frac))
    base[order[:remaining]] += 1
    return base


def dirichlet_partition(
    examples,
    cfg: PartitionConfig,
    rng: np.random.Generator,
) -> list[list[int]]:
    """Split example indices across clients with per-class Dirichlet skew.

    Each example is keyed by the lowest index in its primary-label
    support. Per class, client proportions are drawn from a Dirichlet
    with the configured concentration and realized by largest-remainder
    rounding. Every example lands on exactly one client; empty clients
    are repaired by moving one example from the largest client.
    """
    m = cfg.num_clients
    if len(examples) < m:
        raise ConfigError(
            f"cannot spread {len(examples)} examples over {m} clients"
        )
    num_classes = examples[0].d_gt.size
    keys = [min(ex.primary_labels) for ex in examples]
    clients: list[list[int]] = [[] for _ in range(m)]
    for c in range(num_classes):
        proportions = rng.dirichlet(np.full(m, cfg.dirichlet_gamma))
        members = np.array([i for i, key in enumerate(keys) if key == c], dtype=int)
        if members.size == 0:
            continue
        rng.shuffle(members)
        counts = _largest_remainder(members.size, proportions)
        offset = 0
        for client_id, take in enumerate(counts):
            clients[client_id].extend(int(i) for i in members[offset:offset + take])
            offset += take
    while True:
        empty = [i for i, members in enumerate(clients) if not members]
        if not empty:
            break
        donor = max(range(m), key=lambda i: (len(clients[i]), -i))
        clients[empty[0]].append(clients[donor].pop())
    return clients


def assign_quality(
    num_clients: int,
    cfg: PartitionConfig,
    rng: np.random.Generator,
) -> list[int]:
    """Annotator count per client: floor(noise_ratio * M) clients go noisy."""
    num_noisy = int(cfg.noise_ratio * num_clients)
    noisy: set[int] = set()
    if num_noisy > 0:
        noisy = set(int(i) for i in rng.choice(num_clients, size=num_noisy, replace=False))
    return [cfg.noisy_annotators if i in noisy else cfg.clean_annotators
            for i in range(num_clients)]


def build_federation_data(
    cfg: PartitionConfig,
    eval_fraction: float,
    master_seed: int,
) -> FederationData:
    """Generate, split, partition, and annotate a full federation dataset.

    Every stage draws from its own stream derived from (master seed,
    data seed), so the result is bitwise reproducible and identical data
    can be replayed across algorithm variants.
    """
    if not 0 < eval_fraction < 1:
        raise ConfigError(f"eval_fraction must be in (0, 1), got {eval_fraction}")
    gen_rng = seeding.stream(seeding.TAG_DATA, master_seed, cfg.seed)
    pool = generate_ground_truth(
        cfg.num_examples,
        cfg.num_classes,
        cfg.num_features,
        gen_rng,
        top_k=cfg.top_k,
        concentration=cfg.gt_concentration,
        feature_noise_var=cfg.feature_noise_var,
    )

    split_rng = seeding.stream(seeding.TAG_SPLIT, master_seed, cfg.seed)
    perm = split_rng.permutation(cfg.num_examples)
    num_eval = max(1, int(round(cfg.num_examples * eval_fraction)))
    eval_idx = np.sort(perm[:num_eval])
    train_idx = np.sort(perm[num_eval:])
    if train_idx.size < cfg.num_clients:
        raise ConfigError(
            f"only {train_idx.size} training examples for {cfg.num_clients} clients"
        )
    train_pool = [pool[int(i)] for i in train_idx]

    part_rng = seeding.stream(seeding.TAG_PARTITION, master_seed, cfg.seed)
    assignment = dirichlet_partition(train_pool, cfg, part_rng)

    quality_rng = seeding.stream(seeding.TAG_QUALITY, master_seed, cfg.seed)
    qualities = assign_quality(cfg.num_clients, cfg, quality_rng)

    shards = []
    for client_id, indices in enumerate(assignment):
        chosen = sorted(indices)
        feats = np.stack([train_pool[i].features for i in chosen])
        latent = np.stack([train_pool[i].d_gt for i in chosen])
        annotate_rng = seeding.stream(seeding.TAG_ANNOTATE, master_seed, cfg.seed, client_id)
        observed = np.stack([
            simulate_fer_annotators(latent[row], qualities[client_id], annotate_rng)
            for row in range(latent.shape[0])
        ])
        shards.append(ClientShard(
            client_id=client_id,
            features=feats,
            targets=observed,
            latent=latent,
            quality=float(qualities[client_id]),
        ))

    eval_features = np.stack([pool[int(i)].features for i in eval_idx])
    eval_targets = np.stack([pool[int(i)].d_gt for i in eval_idx])
    return FederationData(shards=shards, eval_features=eval_features, eval_targets=eval_targets)


def write_shards(shards, path) -> None:
    """Serialize shards to one line per example.

    Line layout: client id, annotator count, features, observed target,
    latent ground truth, comma-separated with round-trip float precision.
    """
    lines = []
    for shard in shards:
        for row in range(shard.sample_count):
            fields = [str(shard.client_id), repr(shard.quality)]
            fields += [repr(float(v)) for v in shard.features[row]]
            fields += [repr(float(v)) for v in shard.targets[row]]
            fields += [repr(float(v)) for v in shard.latent[row]]
            lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_shards(path, num_features: int, num_classes: int) -> list[ClientShard]:
    """Rebuild shards from the text format written by ``write_shards``."""
    rows: dict[int, list[tuple[float, list[float]]]] = {}
    qualities: dict[int, float] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        parts = line.split(",")
        expected = 2 + num_features + 2 * num_classes
        if len(parts) != expected:
            raise ValueError(f"malformed shard line: {len(parts)} fields, expected {expected}")
        client_id = int(parts[0])
        qualities[client_id] = float(parts[1])
        rows.setdefault(client_id, []).append((float(parts[1]), [float(v) for v in parts[2:]]))
    shards = []
    for client_id in sorted(rows):
        payload = np.array([values for _, values in rows[client_id]])
        feats = payload[:, :num_features]
        targets = payload[:, num_features:num_features + num_classes]
        latent = payload[:, num_features + num_classes:]
        shards.append(ClientShard(
            client_id=client_id,
            features=feats,
            targets=targets,
            latent=latent,
            quality=qualities[client_id],
        ))
    return shards


def check_shard_invariants(shard: ClientShard) -> None:
    """Raise if any observed target or latent row breaks the simplex rules."""
    for row in range(shard.sample_count):
        validate_distribution(shard.targets[row])
        validate_distribution(shard.latent[row])
