"""Numerical verification of the adaptive-calibration optimality result.

Each client's calibration trade-off is summarized by a quadratic
surrogate risk: pure local fitting pays the variance of noisy local
supervision, pure anchor alignment pays the squared semantic shift of
the anchor. The result under test: when the per-client optima differ,
per-client calibration strengths achieve strictly lower total risk than
the best single shared strength, with the gap given exactly by a
completed-square excess term.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class ClientRiskProfile:
    """Variance of local supervision noise and squared anchor shift."""

    sigma2: float
    delta2: float

    def __post_init__(self) -> None:
        if self.sigma2 < 0 or self.delta2 < 0:
            raise ValueError("sigma2 and delta2 must be nonnegative")
        if self.sigma2 + self.delta2 <= 0:
            raise ValueError("sigma2 + delta2 must be positive")


def surrogate_risk(lam: float, profile: ClientRiskProfile) -> float:
    """Quadratic risk of calibration strength lam: (1-lam)^2 s2 + lam^2 d2."""
    if not 0 <= lam <= 1:
        raise ValueError(f"calibration strength must be in [0, 1], got {lam}")
    return (1.0 - lam) ** 2 * profile.sigma2 + lam**2 * profile.delta2


def lambda_star(profile: ClientRiskProfile) -> float:
    """Minimizer of the surrogate risk, clipped to [0, 1]."""
    value = profile.sigma2 / (profile.sigma2 + profile.delta2)
    return min(1.0, max(0.0, value))


def uniform_lambda_star(profiles) -> float:
    """Best single strength shared by all clients, clipped to [0, 1]."""
    if not profiles:
        raise ValueError("need at least one profile")
    total_sigma2 = sum(p.sigma2 for p in profiles)
    total = sum(p.sigma2 + p.delta2 for p in profiles)
    return min(1.0, max(0.0, total_sigma2 / total))


def excess_risk(profiles, lam_bar: float) -> float:
    """Completed-square excess of a shared strength over per-client optima."""
    return sum((p.sigma2 + p.delta2) * (lam_bar - lambda_star(p)) ** 2 for p in profiles)


class TheoremGap(NamedTuple):
    j_adapt: float
    j_uni: float
    gap: float


def theorem_gap(profiles) -> TheoremGap:
    """Total risk under per-client vs best-uniform calibration, and their gap.

    The gap is nonnegative and positive exactly when the per-client
    optima are not all equal.
    """
    if not profiles:
        raise ValueError("need at least one profile")
    j_adapt = sum(surrogate_risk(lambda_star(p), p) for p in profiles)
    lam_bar = uniform_lambda_star(profiles)
    j_uni = sum(surrogate_risk(lam_bar, p) for p in profiles)
    return TheoremGap(j_adapt=j_adapt, j_uni=j_uni, gap=j_uni - j_adapt)


@dataclass(frozen=True)
class SweepReport:
    """Outcome of a randomized stress test of the optimality result."""

    trials: int
    num_clients: int
    gap_min: float
    gap_max: float
    gap_mean: float
    max_identity_residual: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        status = "PASS" if self.ok else f"FAIL ({len(self.violations)} violations)"
        return (
            f"{self.trials} trials x {self.num_clients} clients: {status}; "
            f"gap in [{self.gap_min:.6g}, {self.gap_max:.6g}], mean {self.gap_mean:.6g}, "
            f"max identity residual {self.max_identity_residual:.3g}"
        )


def empirical_profile_sweep(
    num_clients: int,
    rng: np.random.Generator,
    trials: int = 1000,
) -> SweepReport:
    """Randomized check of the optimality result over uniform profile draws.

    Per trial: the gap must be nonnegative, strictly above 1e-12 whenever
    the per-client optima spread by more than 1e-6, and the total risk at
    the best shared strength must decompose into adaptive risk plus the
    excess term to relative error 1e-10.
    """
    if num_clients < 2:
        raise ValueError(f"need at least two clients, got {num_clients}")
    gaps = []
    violations = []
    max_residual = 0.0
    for trial in range(trials):
        draws = rng.uniform(0.01, 10.0, size=(num_clients, 2))
        profiles = [ClientRiskProfile(float(s2), float(d2)) for s2, d2 in draws]
        result = theorem_gap(profiles)
        gaps.append(result.gap)
        if result.gap < 0:
            violations.append(f"trial {trial}: negative gap {result.gap}")
        stars = [lambda_star(p) for p in profiles]
        if max(stars) - min(stars) > 1e-6 and result.gap <= 1e-12:
            violations.append(
                f"trial {trial}: gap {result.gap} not strict despite spread"
            )
        lam_bar = uniform_lambda_star(profiles)
        expected = result.j_adapt + excess_risk(profiles, lam_bar)
        residual = abs(result.j_uni - expected) / max(abs(result.j_uni), 1e-30)
        max_residual = max(max_residual, residual)
        if residual > 1e-10:
            violations.append(f"trial {trial}: identity residual {residual}")
    arr = np.asarray(gaps)
    return SweepReport(
        trials=trials,
        num_clients=num_clients,
        gap_min=float(arr.min()),
        gap_max=float(arr.max()),
        gap_mean=float(arr.mean()),
        max_identity_residual=max_residual,
        violations=tuple(violations),
    )
