"""Reward families and the reward-maximizing routing policy.

Two trade-offs between quality s and cost c under a willingness-to-pay
parameter lam: the linear form r1 = s - c/lam and the bounded exponential
form r2 = s * exp(-c/lam). The policy picks the reward argmax; exact ties
fall to the cheaper model, then to the lower pool index, so a query only
reaches an expensive model when the cheaper ones lose on reward.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import QueryRecord

FAMILIES = ("r1", "r2")
_FAMILY_ALIASES = {"r1": "r1", "linear": "r1", "r2": "r2", "exponential": "r2"}


def canonical_family(name: str) -> str:
    try:
        return _FAMILY_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown reward family {name!r}; expected one of {FAMILIES}") from None


@dataclass(frozen=True)
class RewardSpec:
    family: str  # "r1" (linear) or "r2" (exponential)
    lam: float  # willingness to pay, > 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", canonical_family(self.family))
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be finite and > 0, got {self.lam}")


def reward(s, c, spec: RewardSpec):
    """Reward of quality s at cost c. Accepts scalars or arrays."""
    s = np.asarray(s, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if spec.family == "r1":
        out = s - c / spec.lam
    else:
        out = s * np.exp(-c / spec.lam)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RoutingDecision:
    query_id: str
    index: int
    model: str
    rewards: np.ndarray  # (K,)
    quality: float  # predicted quality of the chosen model
    cost: float  # predicted cost of the chosen model

    def trace_line(self, spec: RewardSpec, realized_quality: float, realized_cost: float) -> str:
        return json.dumps(
            {
                "id": self.query_id,
                "lambda": spec.lam,
                "family": spec.family,
                "model": self.model,
                "quality_pred": self.quality,
                "cost_pred": self.cost,
                "quality_true": realized_quality,
                "cost_true": realized_cost,
            }
        )


def _argmax_with_ties(rewards: np.ndarray, costs: np.ndarray) -> int:
    best = int(np.argmax(rewards))
    ties = np.flatnonzero(rewards == rewards[best])
    if ties.size > 1:
        # cheaper first, then lower index (ties is ascending already)
        best = int(ties[np.argmin(costs[ties])])
    return best


def route(
    predictions_quality: np.ndarray,
    predictions_cost: np.ndarray,
    spec: RewardSpec,
    pool: tuple[str, ...] | None = None,
    query_id: str = "",
) -> RoutingDecision:
    """Pick the reward-maximizing model from per-model (s, c) predictions."""
    s = np.asarray(predictions_quality, dtype=np.float64)
    c = np.asarray(predictions_cost, dtype=np.float64)
    if s.shape != c.shape or s.ndim != 1 or s.size < 1:
        raise ValueError(f"prediction vectors must share a (K,) shape, got {s.shape} and {c.shape}")
    r = reward(s, c, spec)
    idx = _argmax_with_ties(r, c)
    return RoutingDecision(
        query_id=query_id,
        index=idx,
        model=pool[idx] if pool is not None else str(idx),
        rewards=r,
        quality=float(s[idx]),
        cost=float(c[idx]),
    )


def oracle_route(record: QueryRecord, spec: RewardSpec, pool: tuple[str, ...]) -> RoutingDecision:
    """Route on ground truth; per-query reward upper bound for any router."""
    s = np.array([record.quality[m] for m in pool])
    c = np.array([record.cost[m] for m in pool])
    return route(s, c, spec, pool=pool, query_id=record.id)
