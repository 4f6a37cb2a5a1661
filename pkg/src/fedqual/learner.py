"""Linear-softmax predictor, hand-derived gradients, and local training.

The model maps features to logits through a single linear layer; the
predicted label distribution is the softmax of the logits. The local
objective blends supervised fit (KL to the observed target) with anchor
calibration (alignment of the logits to the round-start global model's
logits), weighted by the client's calibration strength alpha. Optional
proximal and weight-decay terms complete the objective.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigError
from .metrics import kl_divergence

if TYPE_CHECKING:
    from .data import ClientShard


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stabilized softmax along the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class ModelParams:
    """Weights of the predictor: one logit row per class plus a bias."""

    weights: np.ndarray  # (num_classes, num_features)
    bias: np.ndarray     # (num_classes,)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise ValueError(f"inconsistent parameter shapes {w.shape} / {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @classmethod
    def zeros(cls, num_classes: int, num_features: int) -> "ModelParams":
        return cls(np.zeros((num_classes, num_features)), np.zeros(num_classes))

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def num_features(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.weights.copy(), self.bias.copy())


@dataclass(frozen=True)
class Example:
    """One training instance: feature vector plus target label distribution."""

    features: np.ndarray
    target: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64))


@dataclass(frozen=True)
class LocalTrainConfig:
    epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    alpha: float = 0.0      # calibration strength; 0 = pure supervised fit
    prox_mu: float = 0.01   # proximal pull toward the global model; 0 disables

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be nonnegative, got {self.weight_decay}")
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.prox_mu < 0:
            raise ValueError(f"prox_mu must be nonnegative, got {self.prox_mu}")


class SquaredLogitsPenalty:
    """Anchor alignment as squared error in logits space.

    Zero exactly when the logits match the anchor. Works on single logit
    vectors and on batches (last axis = classes).
    """

    def value(self, logits: np.ndarray, anchor_logits: np.ndarray) -> float:
        diff = logits - anchor_logits
        return 0.5 * float(np.sum(diff * diff))

    def logits_grad(self, logits: np.ndarray, anchor_logits: np.ndarray) -> np.ndarray:
        return logits - anchor_logits


DEFAULT_PENALTY = SquaredLogitsPenalty()


def forward(params: ModelParams, features) -> tuple[np.ndarray, np.ndarray]:
    """Compute (logits, predicted label distribution) for one feature vector."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (params.num_features,):
        raise ValueError(f"feature shape {x.shape} does not match model ({params.num_features},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    logits = params.weights @ x + params.bias
    return logits, softmax(logits)


def _check_anchor(anchor_logits, num_classes: int) -> np.ndarray:
    a = np.asarray(anchor_logits, dtype=np.float64)
    if a.shape != (num_classes,):
        raise ValueError(f"anchor logits shape {a.shape} does not match ({num_classes},)")
    return a


def joint_loss(
    params: ModelParams,
    example: Example,
    anchor_logits,
    cfg: LocalTrainConfig,
    global_params: ModelParams,
    penalty=DEFAULT_PENALTY,
) -> float:
    """Blend of supervised KL, anchor alignment, and regularization terms."""
    logits, prediction = forward(params, example.features)
    anchor = _check_anchor(anchor_logits, params.num_classes)
    value = (1.0 - cfg.alpha) * kl_divergence(example.target, prediction)
    value += cfg.alpha * penalty.value(logits, anchor)
    if cfg.prox_mu > 0:
        dw = params.weights - global_params.weights
        db = params.bias - global_params.bias
        value += 0.5 * cfg.prox_mu * (float(np.sum(dw * dw)) + float(np.sum(db * db)))
    if cfg.weight_decay > 0:
        value += 0.5 * cfg.weight_decay * (
            float(np.sum(params.weights**2)) + float(np.sum(params.bias**2))
        )
    return value


def joint_grad(
    params: ModelParams,
    example: Example,
    anchor_logits,
    cfg: LocalTrainConfig,
    global_params: ModelParams,
    penalty=DEFAULT_PENALTY,
) -> ModelParams:
    """Analytic gradient of ``joint_loss``, returned with ModelParams shape.

    The logits-space gradient is (1 - alpha) * (prediction - target) plus
    alpha times the penalty's logits gradient; the chain rule through the
    linear map yields the weight and bias gradients.
    """
    logits, prediction = forward(params, example.features)
    anchor = _check_anchor(anchor_logits, params.num_classes)
    x = example.features
    dz = (1.0 - cfg.alpha) * (prediction - example.target)
    dz = dz + cfg.alpha * penalty.logits_grad(logits, anchor)
    grad_w = np.outer(dz, x)
    grad_b = dz.copy()
    if cfg.prox_mu > 0:
        grad_w += cfg.prox_mu * (params.weights - global_params.weights)
        grad_b += cfg.prox_mu * (params.bias - global_params.bias)
    if cfg.weight_decay > 0:
        grad_w += cfg.weight_decay * params.weights
        grad_b += cfg.weight_decay * params.bias
    return ModelParams(grad_w, grad_b)


def local_train(
    start_params: ModelParams,
    anchor_params: ModelParams,
    shard: "ClientShard",
    cfg: LocalTrainConfig,
    rng: np.random.Generator,
    penalty=DEFAULT_PENALTY,
) -> ModelParams:
    """Run mini-batch SGD with momentum over the shard for ``cfg.epochs`` epochs.

    Anchor logits are computed once from the frozen ``anchor_params`` and
    reused for every epoch. Batches come from a seeded shuffle per epoch;
    the last short batch is kept. The batch loss is the mean over the
    batch, so the proximal and decay terms enter once per step.
    """
    features = np.asarray(shard.features, dtype=np.float64)
    targets = np.asarray(shard.targets, dtype=np.float64)
    n = features.shape[0]
    if n == 0:
        raise ConfigError("client shard is empty")

    anchor_logits = features @ anchor_params.weights.T + anchor_params.bias

    w = start_params.weights.copy()
    b = start_params.bias.copy()
    vel_w = np.zeros_like(w)
    vel_b = np.zeros_like(b)
    alpha = cfg.alpha
    mu = cfg.prox_mu
    decay = cfg.weight_decay

    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            xb = features[idx]
            yb = targets[idx]
            ab = anchor_logits[idx]
            logits = xb @ w.T + b
            preds = softmax(logits)
            dz = (1.0 - alpha) * (preds - yb) + alpha * penalty.logits_grad(logits, ab)
            dz /= idx.size
            grad_w = dz.T @ xb
            grad_b = dz.sum(axis=0)
            if mu > 0:
                grad_w += mu * (w - anchor_params.weights)
                grad_b += mu * (b - anchor_params.bias)
            if decay > 0:
                grad_w += decay * w
                grad_b += decay * b
            vel_w = cfg.momentum * vel_w + grad_w
            vel_b = cfg.momentum * vel_b + grad_b
            w -= cfg.learning_rate * vel_w
            b -= cfg.learning_rate * vel_b

    return ModelParams(w, b)
