"""Shared test oracles: finite differences and grid minimization."""
from __future__ import annotations

import numpy as np

from fedqual.learner import ModelParams


def flatten(params: ModelParams) -> np.ndarray:
    return np.concatenate([params.weights.ravel(), params.bias])


def unflatten(vec: np.ndarray, num_classes: int, num_features: int) -> ModelParams:
    split = num_classes * num_features
    return ModelParams(vec[:split].reshape(num_classes, num_features), vec[split:])


def finite_difference_grad(loss_of_params, params: ModelParams, step: float = 1e-5) -> ModelParams:
    """Central-difference gradient of a scalar loss over all parameters."""
    base = flatten(params)
    grad = np.zeros_like(base)
    c, f = params.num_classes, params.num_features
    for i in range(base.size):
        plus = base.copy()
        plus[i] += step
        minus = base.copy()
        minus[i] -= step
        grad[i] = (loss_of_params(unflatten(plus, c, f))
                   - loss_of_params(unflatten(minus, c, f))) / (2 * step)
    return unflatten(grad, c, f)


def relative_grad_error(analytic: ModelParams, numeric: ModelParams) -> float:
    a = flatten(analytic)
    n = flatten(numeric)
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a), np.linalg.norm(n), 1e-12))


def grid_argmin(fn, step: float = 1e-6) -> float:
    """Brute-force minimizer of fn over [0, 1] on a uniform grid."""
    grid = np.arange(0.0, 1.0 + step, step)
    values = fn(grid)
    return float(grid[int(np.argmin(values))])
