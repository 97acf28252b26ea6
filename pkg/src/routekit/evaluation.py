"""Sweep-based router evaluation on the cost-performance plane.

A sweep routes the test set once per willingness-to-pay value and records
the realized (ground-truth) average cost and quality plus the call
distribution. The upper convex hull of those points, integrated over the
cost range, gives AIQ; log-weighted first differences give the
lambda-sensitivity of performance and cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dataset import QueryRecord, RoutingDataset
from .predictors.base import PredictionMatrix
from .routing import RewardSpec, RoutingDecision, oracle_route, route


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    avg_cost: float  # mean realized cost per query, USD
    avg_perf: float  # mean realized quality
    calls: np.ndarray  # (K,) fraction of queries per model, sums to 1


@dataclass(frozen=True)
class ParetoCurve:
    hull: tuple[tuple[float, float], ...]  # (cost, perf) vertices, cost ascending
    cost_range: tuple[float, float]


# A router maps (query index, record, reward spec) to a decision.
Router = Callable[[int, QueryRecord, RewardSpec], RoutingDecision]


def oracle_router(ds: RoutingDataset) -> Router:
    def _route(i: int, record: QueryRecord, spec: RewardSpec) -> RoutingDecision:
        return oracle_route(record, spec, ds.pool)

    return _route


def prediction_router(
    quality: PredictionMatrix, cost: PredictionMatrix, pool: tuple[str, ...]
) -> Router:
    """Router over precomputed prediction matrices (rows in dataset order)."""
    qv, cv = quality.values, cost.values

    def _route(i: int, record: QueryRecord, spec: RewardSpec) -> RoutingDecision:
        return route(qv[i], cv[i], spec, pool=pool, query_id=record.id)

    return _route


def sweep(
    router: Router,
    ds_test: RoutingDataset,
    lambdas: Sequence[float],
    family: str,
    return_decisions: bool = False,
):
    """Route every test query at each lambda and average realized outcomes.

    Realized quality and cost always come from ground truth, regardless of
    what the router consulted.
    """
    if len(ds_test) == 0:
        raise EvaluationError("cannot sweep an empty test set")
    lams = [float(l) for l in lambdas]
    if len(lams) < 3:
        raise EvaluationError("sweep needs at least 3 lambda values")
    if any(l <= 0 for l in lams) or any(b <= a for a, b in zip(lams, lams[1:])):
        raise EvaluationError("lambdas must be positive and strictly ascending")

    quality = ds_test.quality_matrix
    cost = ds_test.cost_matrix
    k = ds_test.n_models
    points: list[SweepPoint] = []
    all_decisions: list[list[RoutingDecision]] = []
    for lam in lams:
        spec = RewardSpec(family=family, lam=lam)
        chosen = np.empty(len(ds_test), dtype=np.int64)
        decisions = []
        for i, record in enumerate(ds_test.records):
            d = router(i, record, spec)
            chosen[i] = d.index
            if return_decisions:
                decisions.append(d)
        rows = np.arange(len(ds_test))
        counts = np.bincount(chosen, minlength=k)
        points.append(
            SweepPoint(
                lam=lam,
                avg_cost=float(cost[rows, chosen].mean()),
                avg_perf=float(quality[rows, chosen].mean()),
                calls=counts / len(ds_test),
            )
        )
        if return_decisions:
            all_decisions.append(decisions)
    if return_decisions:
        return points, all_decisions
    return points


# ---------------------------------------------------------------------------
# Pareto hull and the metrics on top of it


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def pareto_hull(points: Sequence[tuple[float, float]]) -> ParetoCurve:
    """Upper convex hull of (cost, perf) points via the monotone chain.

    Points sharing a cost are collapsed to the best perf first; collinear
    interior points are dropped. The cost range [a, b] spans the input
    cloud, and every input point lies on or below the returned envelope.
    """
    pts = [(float(c), float(p)) for c, p in points]
    if len(pts) < 2:
        raise EvaluationError("hull needs at least 2 points")
    best_at_cost: dict[float, float] = {}
    for c, p in pts:
        if c not in best_at_cost or p > best_at_cost[c]:
            best_at_cost[c] = p
    uniq = sorted(best_at_cost.items())
    a, b = uniq[0][0], uniq[-1][0]
    if a == b:
        raise EvaluationError("all points share one cost; the hull area is undefined")

    hull: list[tuple[float, float]] = []
    for pt in uniq:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) >= 0.0:
            hull.pop()
        hull.append(pt)
    return ParetoCurve(hull=tuple(hull), cost_range=(a, b))


def aiq(curve: ParetoCurve) -> float:
    """Trapezoidal area under the hull envelope, normalized by cost range."""
    a, b = curve.cost_range
    if not b > a:
        raise EvaluationError("cost range is degenerate; aiq undefined")
    area = 0.0
    for (c0, p0), (c1, p1) in zip(curve.hull, curve.hull[1:]):
        area += (c1 - c0) * (p0 + p1) / 2.0
    return area / (b - a)


def lambda_sensitivity(
    points: Sequence[SweepPoint], axis: str = "perf", absolute: bool = False
) -> float:
    """Log-lambda-weighted average first difference of perf or cost.

    The printed form uses signed differences; `absolute` switches to
    magnitudes for callers who want drift rather than net change.
    """
    if len(points) < 3:
        raise EvaluationError("sensitivity needs at least 3 sweep points")
    lams = [p.lam for p in points]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise EvaluationError("sweep lambdas must be strictly increasing")
    if axis not in ("perf", "cost"):
        raise EvaluationError(f"axis must be 'perf' or 'cost', got {axis!r}")
    values = [p.avg_perf if axis == "perf" else p.avg_cost for p in points]
    total = 0.0
    for j in range(len(points) - 1):
        dv = values[j + 1] - values[j]
        total += math.log(lams[j + 1] / lams[j]) * (abs(dv) if absolute else dv)
    return total / math.log(lams[-1] / lams[0])


@dataclass(frozen=True)
class Metrics:
    aiq: float
    perf_max: float
    sens_perf: float
    sens_cost: float
    max_calls: float  # peak fraction of queries routed to the strongest model

    def to_dict(self) -> dict:
        return {
            "aiq": self.aiq,
            "perf_max": self.perf_max,
            "sens_perf": self.sens_perf,
            "sens_cost": self.sens_cost,
            "max_calls": self.max_calls,
        }


def metrics_report(
    points: Sequence[SweepPoint],
    strongest_model: str,
    pool: tuple[str, ...],
    absolute_sensitivity: bool = False,
) -> Metrics:
    """All five sweep metrics at once."""
    if strongest_model not in pool:
        raise EvaluationError(f"strongest model {strongest_model!r} not in pool {pool}")
    idx = pool.index(strongest_model)
    curve = pareto_hull([(p.avg_cost, p.avg_perf) for p in points])
    return Metrics(
        aiq=aiq(curve),
        perf_max=max(p.avg_perf for p in points),
        sens_perf=lambda_sensitivity(points, "perf", absolute_sensitivity),
        sens_cost=lambda_sensitivity(points, "cost", absolute_sensitivity),
        max_calls=max(float(p.calls[idx]) for p in points),
    )


def default_lambda_grid(low: float = 1e-4, high: float = 1e2, n: int = 16) -> list[float]:
    """Log-spaced grid spanning cost-dominated to quality-dominated regimes."""
    return [float(v) for v in np.geomspace(low, high, num=n)]
