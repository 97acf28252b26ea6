"""Nonparametric nearest-neighbor baseline predictor."""

from __future__ import annotations

import numpy as np

from ..dataset import RoutingDataset
from .base import PredictorError


def _neighbor_indices(
    train_emb: np.ndarray, queries: np.ndarray, k: int, chunk: int = 512
) -> np.ndarray:
    """k nearest training rows per query by Euclidean distance.

    Stable argsort breaks distance ties by training record order.
    """
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    train_sq = np.sum(train_emb**2, axis=1)
    for lo in range(0, queries.shape[0], chunk):
        qc = queries[lo : lo + chunk]
        d2 = np.sum(qc**2, axis=1)[:, None] - 2.0 * qc @ train_emb.T + train_sq[None, :]
        out[lo : lo + chunk] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def knn_predict(train: RoutingDataset, query_embedding: np.ndarray, k: int) -> np.ndarray:
    """Mean quality of the k nearest training queries, per pool model."""
    if len(train) == 0:
        raise PredictorError("knn needs a non-empty training set")
    if k > len(train):
        raise PredictorError(f"k={k} exceeds the {len(train)} training records")
    idx = _neighbor_indices(train.embeddings, np.asarray(query_embedding, dtype=np.float64)[None, :], k)
    return train.quality_matrix[idx[0]].mean(axis=0)


class KNNPredictor:
    architecture = "knn"

    def __init__(
        self,
        train_embeddings: np.ndarray,
        train_quality: np.ndarray,
        train_cost: np.ndarray,
        k: int,
        target: str,
        config=None,
    ):
        if train_embeddings.shape[0] == 0:
            raise PredictorError("knn needs a non-empty training set")
        if k > train_embeddings.shape[0]:
            raise PredictorError(f"k={k} exceeds the {train_embeddings.shape[0]} training records")
        self.train_embeddings = train_embeddings
        self.train_quality = train_quality
        self.train_cost = train_cost
        self.k = k
        self.target = target
        self.config = config

    @staticmethod
    def from_dataset(train: RoutingDataset, k: int, target: str, config=None) -> "KNNPredictor":
        return KNNPredictor(
            train.embeddings, train.quality_matrix, train.cost_matrix, k, target, config
        )

    def predict(self, embeddings: np.ndarray, reps_values: np.ndarray | None = None) -> np.ndarray:
        idx = _neighbor_indices(self.train_embeddings, np.asarray(embeddings, dtype=np.float64), self.k)
        source = self.train_quality if self.target == "quality" else self.train_cost
        return source[idx].mean(axis=1)

    def get_params(self) -> dict[str, np.ndarray]:
        return {
            "train_embeddings": self.train_embeddings,
            "train_quality": self.train_quality,
            "train_cost": self.train_cost,
        }

    def meta(self) -> dict:
        return {
            "architecture": self.architecture,
            "target": self.target,
            "k": self.k,
            "config": self.config.to_dict() if self.config else None,
        }

    @staticmethod
    def from_arrays(meta: dict, arrays: dict[str, np.ndarray], config=None) -> "KNNPredictor":
        return KNNPredictor(
            arrays["train_embeddings"],
            arrays["train_quality"],
            arrays["train_cost"],
            int(meta["k"]),
            meta["target"],
            config,
        )
