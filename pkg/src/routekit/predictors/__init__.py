"""Predictor architectures and the shared training engine."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..representations import ModelRepresentation
from .attention import AttentionParams, AttentionPredictor, attention_forward, init_attention_params
from .base import (
    ARCHITECTURES,
    TARGETS,
    PredictionMatrix,
    PredictorConfig,
    PredictorError,
    load_params,
    save_params,
    sigmoid,
    softmax,
    softplus,
    softplus_inv,
)
from .fcn import FCNPredictor, init_fcn
from .knn import KNNPredictor, knn_predict
from .regression import (
    RegressionEmbPredictor,
    RegressionPredictor,
    fit_regression,
    fit_regression_emb,
)
from .training import Adam, TrainingDivergence, cosine_lr, mse, predict_matrix, train

_CLASSES = {
    "attention": AttentionPredictor,
    "fcn2": FCNPredictor,
    "fcn3": FCNPredictor,
    "fcn2_emb": FCNPredictor,
    "fcn3_emb": FCNPredictor,
    "regression": RegressionPredictor,
    "regression_emb": RegressionEmbPredictor,
    "knn": KNNPredictor,
}


def forward_emb_variant(
    query_embedding: np.ndarray, rep: ModelRepresentation, predictor
) -> float:
    """Score one (query, model) pair with an embedding-concatenation predictor."""
    if not hasattr(predictor, "predict_pair"):
        raise PredictorError(f"{predictor.architecture} is not an emb-variant predictor")
    return predictor.predict_pair(np.asarray(query_embedding, dtype=np.float64), rep.values)


def save_predictor(predictor, path: str | Path) -> None:
    meta = predictor.meta()
    pool = getattr(predictor, "pool", None)
    if pool is not None:
        meta["pool"] = list(pool)
    save_params(path, meta, predictor.get_params())


def load_predictor(path: str | Path):
    meta, arrays = load_params(path)
    arch = meta.get("architecture")
    if arch not in _CLASSES:
        raise PredictorError(f"unknown architecture in artifact: {arch!r}")
    config = PredictorConfig.from_dict(meta["config"]) if meta.get("config") else None
    model = _CLASSES[arch].from_arrays(meta, arrays, config)
    if meta.get("pool"):
        model.pool = tuple(meta["pool"])
    return model


__all__ = [
    "ARCHITECTURES",
    "TARGETS",
    "Adam",
    "AttentionParams",
    "AttentionPredictor",
    "FCNPredictor",
    "KNNPredictor",
    "PredictionMatrix",
    "PredictorConfig",
    "PredictorError",
    "RegressionEmbPredictor",
    "RegressionPredictor",
    "TrainingDivergence",
    "attention_forward",
    "cosine_lr",
    "fit_regression",
    "fit_regression_emb",
    "forward_emb_variant",
    "init_attention_params",
    "init_fcn",
    "knn_predict",
    "load_predictor",
    "mse",
    "predict_matrix",
    "save_predictor",
    "save_params",
    "load_params",
    "sigmoid",
    "softmax",
    "softplus",
    "softplus_inv",
    "train",
]
