"""Closed-form linear predictors via Tikhonov-damped normal equations.

Plain form maps the query embedding to all K targets at once; the emb form
maps [query embedding ; model profile] to a single score and is fit over all
(query, model) pairs. Predictions are clipped to the target's valid range;
`predict_raw` exposes the unclipped least-squares output.
"""

from __future__ import annotations

import numpy as np

from ..dataset import RoutingDataset
from .base import PredictorError

DEFAULT_RIDGE = 1e-8


def _solve_normal_equations(gram: np.ndarray, moment: np.ndarray, ridge: float) -> np.ndarray:
    gram = gram + ridge * np.eye(gram.shape[0])
    coef = np.linalg.solve(gram, moment)
    if not np.all(np.isfinite(coef)):
        raise PredictorError("normal-equation solve produced non-finite coefficients")
    return coef


class RegressionPredictor:
    architecture = "regression"

    def __init__(self, coef: np.ndarray, target: str, intercept: bool, config=None):
        self.coef = coef  # (D [+1], K)
        self.target = target
        self.intercept = intercept
        self.config = config

    def predict_raw(self, embeddings: np.ndarray) -> np.ndarray:
        x = np.asarray(embeddings, dtype=np.float64)
        if self.intercept:
            return x @ self.coef[:-1] + self.coef[-1]
        return x @ self.coef

    def predict(self, embeddings: np.ndarray, reps_values: np.ndarray | None = None) -> np.ndarray:
        raw = self.predict_raw(embeddings)
        return np.clip(raw, 0.0, 1.0) if self.target == "quality" else np.clip(raw, 0.0, None)

    def get_params(self) -> dict[str, np.ndarray]:
        return {"coef": self.coef}

    def meta(self) -> dict:
        return {
            "architecture": self.architecture,
            "target": self.target,
            "intercept": self.intercept,
            "config": self.config.to_dict() if self.config else None,
        }

    @staticmethod
    def from_arrays(meta: dict, arrays: dict[str, np.ndarray], config=None) -> "RegressionPredictor":
        return RegressionPredictor(arrays["coef"], meta["target"], bool(meta["intercept"]), config)


def fit_regression(
    ds_train: RoutingDataset,
    target: str,
    ridge: float = DEFAULT_RIDGE,
    intercept: bool = True,
    config=None,
) -> RegressionPredictor:
    """Least-squares fit of embeddings onto the (n, K) target matrix."""
    if len(ds_train) == 0:
        raise PredictorError("cannot fit regression on an empty training set")
    x = ds_train.embeddings
    t = ds_train.quality_matrix if target == "quality" else ds_train.cost_matrix
    if intercept:
        x = np.hstack([x, np.ones((x.shape[0], 1))])
    coef = _solve_normal_equations(x.T @ x, x.T @ t, ridge)
    return RegressionPredictor(coef, target, intercept, config)


class RegressionEmbPredictor:
    architecture = "regression_emb"

    def __init__(self, coef: np.ndarray, query_dim: int, target: str, config=None):
        self.coef = coef  # (query_dim + C + 1,)
        self.query_dim = query_dim
        self.target = target
        self.config = config

    def predict_raw(self, embeddings: np.ndarray, reps_values: np.ndarray) -> np.ndarray:
        x = np.asarray(embeddings, dtype=np.float64)
        d = self.query_dim
        if x.shape[1] != d or d + reps_values.shape[1] + 1 != self.coef.shape[0]:
            raise PredictorError("embedding/profile dimensions do not match fitted coefficients")
        # separable: x-part varies per query, profile-part per model
        return (x @ self.coef[:d])[:, None] + (reps_values @ self.coef[d:-1])[None, :] + self.coef[-1]

    def predict(self, embeddings: np.ndarray, reps_values: np.ndarray) -> np.ndarray:
        raw = self.predict_raw(embeddings, reps_values)
        return np.clip(raw, 0.0, 1.0) if self.target == "quality" else np.clip(raw, 0.0, None)

    def predict_pair(self, embedding: np.ndarray, rep_values: np.ndarray) -> float:
        return float(self.predict(np.asarray(embedding)[None, :], rep_values[None, :])[0, 0])

    def get_params(self) -> dict[str, np.ndarray]:
        return {"coef": self.coef}

    def meta(self) -> dict:
        return {
            "architecture": self.architecture,
            "target": self.target,
            "query_dim": self.query_dim,
            "config": self.config.to_dict() if self.config else None,
        }

    @staticmethod
    def from_arrays(meta: dict, arrays: dict[str, np.ndarray], config=None) -> "RegressionEmbPredictor":
        return RegressionEmbPredictor(arrays["coef"], int(meta["query_dim"]), meta["target"], config)


def fit_regression_emb(
    ds_train: RoutingDataset,
    reps_values: np.ndarray,
    target: str,
    ridge: float = DEFAULT_RIDGE,
    config=None,
    chunk: int = 1024,
) -> RegressionEmbPredictor:
    """Fit the pairwise form over all (query, model) pairs.

    The Gram matrix is accumulated in query chunks so the stacked pair
    matrix is never materialized.
    """
    if len(ds_train) == 0:
        raise PredictorError("cannot fit regression on an empty training set")
    x = ds_train.embeddings
    t = ds_train.quality_matrix if target == "quality" else ds_train.cost_matrix
    k = reps_values.shape[0]
    dim = x.shape[1] + reps_values.shape[1] + 1
    gram = np.zeros((dim, dim))
    moment = np.zeros(dim)
    for lo in range(0, x.shape[0], chunk):
        xc = x[lo : lo + chunk]
        pairs = np.concatenate(
            [
                np.repeat(xc, k, axis=0),
                np.tile(reps_values, (xc.shape[0], 1)),
                np.ones((xc.shape[0] * k, 1)),
            ],
            axis=1,
        )
        gram += pairs.T @ pairs
        moment += pairs.T @ t[lo : lo + chunk].reshape(-1)
    coef = _solve_normal_equations(gram, moment, ridge)
    return RegressionEmbPredictor(coef, x.shape[1], target, config)
