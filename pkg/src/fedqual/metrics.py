"""Distance and similarity measures between label distributions.

All six measures take a supervision target and a prediction, both
probability vectors over the same label set. Distances are zero at
equality; intersection and cosine are one at equality.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIMPLEX_ATOL = 1e-9

# Smoothing floor for the KL divergence: added to every entry of both
# arguments, followed by renormalization. Keeps KL finite at simplex
# vertices while preserving "zero iff equal".
SMOOTH_EPS = 1e-12

METRIC_NAMES = ("kl", "chebyshev", "clark", "canberra", "intersection", "cosine")


def validate_distribution(values) -> np.ndarray:
    """Check label-distribution invariants and return the vector as float64.

    A label distribution has at least two nonnegative entries summing to
    one within ``SIMPLEX_ATOL``.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D distribution, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError("a label distribution needs at least two classes")
    if not np.all(np.isfinite(arr)):
        raise ValueError("label distribution has non-finite entries")
    if np.any(arr < 0.0):
        raise ValueError("label distribution has negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > SIMPLEX_ATOL:
        raise ValueError(f"label distribution sums to {total}, not 1")
    return arr


def _pair(target, prediction) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(target, dtype=np.float64)
    p = np.asarray(prediction, dtype=np.float64)
    if d.shape != p.shape:
        raise ValueError(f"dimension mismatch: target {d.shape} vs prediction {p.shape}")
    if np.isnan(d).any() or np.isnan(p).any():
        raise ValueError("NaN in metric input")
    return d, p


def _smooth(a: np.ndarray) -> np.ndarray:
    s = a + SMOOTH_EPS
    return s / s.sum(axis=-1, keepdims=True)


def _kl(d: np.ndarray, p: np.ndarray) -> np.ndarray:
    ds, ps = _smooth(d), _smooth(p)
    return np.sum(ds * np.log(ds / ps), axis=-1)


def _chebyshev(d: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.max(np.abs(d - p), axis=-1)


def _clark(d: np.ndarray, p: np.ndarray) -> np.ndarray:
    num = (d - p) ** 2
    den = (d + p) ** 2
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return np.sqrt(np.sum(terms, axis=-1))


def _canberra(d: np.ndarray, p: np.ndarray) -> np.ndarray:
    num = np.abs(d - p)
    den = d + p
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return np.sum(terms, axis=-1)


def _intersection(d: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.sum(np.minimum(d, p), axis=-1)


def _cosine(d: np.ndarray, p: np.ndarray) -> np.ndarray:
    dot = np.sum(d * p, axis=-1)
    return dot / (np.linalg.norm(d, axis=-1) * np.linalg.norm(p, axis=-1))


def kl_divergence(target, prediction) -> float:
    """KL(target || prediction) after epsilon smoothing of both arguments."""
    return float(_kl(*_pair(target, prediction)))


def chebyshev(target, prediction) -> float:
    """Largest per-class probability gap."""
    return float(_chebyshev(*_pair(target, prediction)))


def clark(target, prediction) -> float:
    """Root of summed squared relative gaps; zero-mass classes contribute 0."""
    return float(_clark(*_pair(target, prediction)))


def canberra(target, prediction) -> float:
    """Summed absolute relative gaps; zero-mass classes contribute 0."""
    return float(_canberra(*_pair(target, prediction)))


def intersection(target, prediction) -> float:
    """Shared probability mass: sum of per-class minima."""
    return float(_intersection(*_pair(target, prediction)))


def cosine(target, prediction) -> float:
    """Cosine of the angle between the two vectors."""
    return float(_cosine(*_pair(target, prediction)))


@dataclass(frozen=True)
class MetricReport:
    """All six measures for one target/prediction comparison."""

    kl: float
    chebyshev: float
    clark: float
    canberra: float
    intersection: float
    cosine: float

    def values(self) -> tuple[float, ...]:
        """Metric values in canonical column order (``METRIC_NAMES``)."""
        return (self.kl, self.chebyshev, self.clark, self.canberra,
                self.intersection, self.cosine)


def report(target, prediction) -> MetricReport:
    """Evaluate all six measures on a single pair."""
    d, p = _pair(target, prediction)
    return MetricReport(
        kl=float(_kl(d, p)),
        chebyshev=float(_chebyshev(d, p)),
        clark=float(_clark(d, p)),
        canberra=float(_canberra(d, p)),
        intersection=float(_intersection(d, p)),
        cosine=float(_cosine(d, p)),
    )


def mean_report(targets, predictions) -> MetricReport:
    """Row-wise means of all six measures over matched 2-D arrays."""
    d, p = _pair(targets, predictions)
    if d.ndim != 2:
        raise ValueError(f"expected 2-D arrays, got shape {d.shape}")
    return MetricReport(
        kl=float(np.mean(_kl(d, p))),
        chebyshev=float(np.mean(_chebyshev(d, p))),
        clark=float(np.mean(_clark(d, p))),
        canberra=float(np.mean(_canberra(d, p))),
        intersection=float(np.mean(_intersection(d, p))),
        cosine=float(np.mean(_cosine(d, p))),
    )
