"""Common result type for population-size estimators."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Optional


def config_fingerprint(config: dict[str, Any]) -> str:
    """Short stable hash of an estimator configuration.

    Algorithm-level choices (test statistics, burn-in conventions, grid
    bounds) belong in the config so that reported numbers are traceable.
    """
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class Estimate:
    """Point and interval estimate of a population size."""

    estimator: str
    point: float
    lower: float
    upper: float
    level: float
    seed: Optional[int]
    fingerprint: str
    dataset: Optional[str] = None
    config: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.lower <= self.point <= self.upper):
            raise ValueError(
                f"interval [{self.lower}, {self.upper}] must contain point {self.point}"
            )
        if not (0.0 < self.level < 1.0):
            raise ValueError("level must be in (0, 1)")

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "estimator": self.estimator,
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
            "seed": self.seed,
            "fingerprint": self.fingerprint,
            "dataset": self.dataset,
            "config": dict(self.config),
        }
