"""Quality-driven calibration strength for anchor-guided local training.

Each client's supervision quality is summarized by a single nonnegative
scalar (here: how many annotators produced its label distributions). The
calibration weight decides how strongly the client's logits are pulled
toward the global anchor: low quality gets strong correction, high
quality keeps its autonomy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CalibrationConfig:
    beta: float = 5.0       # sharpness of the quality-to-weight transition
    lambda0: float = 0.5    # intervention offset
    tau: float = 10.0       # quality normalizer (maximum attainable quality)

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def _sigmoid(x: float) -> float:
    # stable in both tails
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def intervention_level(quality: float, cfg: CalibrationConfig) -> float:
    """How much corrective guidance a client needs, in [0, 1].

    One at zero quality, falling linearly to zero at quality ``tau`` and
    clamped there for anything above.
    """
    if quality < 0:
        raise ValueError(f"quality must be nonnegative, got {quality}")
    return max(0.0, 1.0 - quality / cfg.tau)


def compute_alpha(quality: float, cfg: CalibrationConfig) -> float:
    """Calibration weight: sigmoid ramp in the intervention level.

    Strictly inside (0, 1), nonincreasing in quality, and exactly 0.5 when
    the intervention level meets the offset ``lambda0``.
    """
    level = intervention_level(quality, cfg)
    return _sigmoid(cfg.beta * (level - cfg.lambda0))
