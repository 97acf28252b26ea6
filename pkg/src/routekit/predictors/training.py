"""Gradient training engine: Adam, cosine-annealed learning rate, MSE loss.

One entry point, `train`, covers every architecture. Closed-form and
nonparametric architectures short-circuit; the rest run seeded mini-batch
gradient descent and keep the parameter snapshot with the lowest validation
MSE. Training is deterministic given (config.seed, data).
"""

from __future__ import annotations

import math

import numpy as np

from ..dataset import RoutingDataset
from ..representations import ModelRepresentation, reps_matrix
from .attention import AttentionPredictor, init_attention_params
from .base import PredictorConfig, PredictorError, PredictionMatrix, softplus_inv
from .fcn import FCNPredictor, init_fcn
from .knn import KNNPredictor
from .regression import fit_regression, fit_regression_emb


class TrainingDivergence(RuntimeError):
    """Loss became non-finite; carries the epoch where it happened."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite training loss at epoch {epoch}: {loss}")
        self.epoch = epoch


def cosine_lr(epoch: int, total_epochs: int, lr_max: float, lr_min: float = 0.0) -> float:
    """Cosine annealing: lr_max at epoch 0, lr_min at epoch == total_epochs."""
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * epoch / total_epochs))


class Adam:
    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(
        self,
        params: dict[str, np.ndarray],
        grads: dict[str, np.ndarray],
        lr: float,
        weight_decay: float = 0.0,
    ) -> None:
        """In-place update with decoupled weight decay."""
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for key, p in params.items():
            g = grads[key]
            if key not in self.m:
                self.m[key] = np.zeros_like(p)
                self.v[key] = np.zeros_like(p)
            self.m[key] = self.beta1 * self.m[key] + (1.0 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1.0 - self.beta2) * g**2
            update = (self.m[key] / bc1) / (np.sqrt(self.v[key] / bc2) + self.eps)
            p -= lr * (update + weight_decay * p)


def _target_matrix(ds: RoutingDataset, target: str) -> np.ndarray:
    return ds.quality_matrix if target == "quality" else ds.cost_matrix


def _build_model(config: PredictorConfig, ds_train: RoutingDataset, rep_dim: int | None):
    arch, target = config.architecture, config.target
    k = ds_train.n_models
    cost_mean = ds_train.cost_matrix.mean(axis=0) if target == "cost" else None

    if arch == "attention":
        if rep_dim is None:
            raise PredictorError("attention needs model profiles")
        bias = softplus_inv(max(float(cost_mean.mean()), 1e-12)) if target == "cost" else 0.0
        params = init_attention_params(ds_train.dim, rep_dim, config.internal_dim, config.seed, bias)
        return AttentionPredictor(params, target, config)
    if arch in ("fcn2", "fcn3"):
        if target == "cost":
            bias = np.array([softplus_inv(max(float(c), 1e-12)) for c in cost_mean])
        else:
            bias = 0.0
        return init_fcn(ds_train.dim, config.hidden_dims, k, target, arch, emb=False,
                        seed=config.seed, output_bias=bias, config=config)
    if arch in ("fcn2_emb", "fcn3_emb"):
        if rep_dim is None:
            raise PredictorError(f"{arch} needs model profiles")
        bias = softplus_inv(max(float(cost_mean.mean()), 1e-12)) if target == "cost" else 0.0
        return init_fcn(ds_train.dim + rep_dim, config.hidden_dims, 1, target, arch, emb=True,
                        seed=config.seed, output_bias=bias, config=config)
    raise PredictorError(f"no gradient model for architecture {config.architecture!r}")


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred - target) ** 2))


def train(
    ds_train: RoutingDataset,
    ds_val: RoutingDataset,
    reps: list[ModelRepresentation] | np.ndarray | None,
    config: PredictorConfig,
):
    """Train one predictor per the config; returns the fitted predictor."""
    config = config.resolved()
    if len(ds_train) == 0:
        raise PredictorError("cannot train on an empty dataset")
    reps_values = None
    if reps is not None:
        reps_values = reps if isinstance(reps, np.ndarray) else reps_matrix(reps)

    if config.architecture == "regression":
        model = fit_regression(ds_train, config.target, config=config)
        model.pool = tuple(ds_train.pool)
        return model
    if config.architecture == "regression_emb":
        if reps_values is None:
            raise PredictorError("regression_emb needs model profiles")
        model = fit_regression_emb(ds_train, reps_values, config.target, config=config)
        model.pool = tuple(ds_train.pool)
        return model
    if config.architecture == "knn":
        model = KNNPredictor.from_dataset(ds_train, config.k_neighbors, config.target, config)
        model.pool = tuple(ds_train.pool)
        return model

    model = _build_model(config, ds_train, None if reps_values is None else reps_values.shape[1])
    model.pool = tuple(ds_train.pool)
    x = ds_train.embeddings
    t = _target_matrix(ds_train, config.target)
    x_val = ds_val.embeddings if len(ds_val) else None
    t_val = _target_matrix(ds_val, config.target) if len(ds_val) else None

    rng = np.random.default_rng(config.seed)
    adam = Adam()
    best_val = math.inf
    best_params = {k: v.copy() for k, v in model.get_params().items()}

    for epoch in range(config.epochs):
        lr = cosine_lr(epoch, config.epochs, config.learning_rate)
        perm = rng.permutation(len(ds_train))
        for lo in range(0, len(ds_train), config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            loss, grads = model.loss_and_grads(x[idx], t[idx], reps_values)
            if not math.isfinite(loss):
                raise TrainingDivergence(epoch, loss)
            adam.step(model.get_params(), grads, lr, config.weight_decay)
        if x_val is not None:
            val = mse(model.predict(x_val, reps_values), t_val)
            if val < best_val:
                best_val = val
                best_params = {k: v.copy() for k, v in model.get_params().items()}
    if x_val is not None:
        model.set_params(best_params)
    return model


def predict_matrix(predictor, ds: RoutingDataset, reps=None) -> PredictionMatrix:
    """Apply a trained predictor to every query; rows follow record order."""
    reps_values = None
    if reps is not None:
        if not isinstance(reps, np.ndarray):
            names = [r.model for r in reps]
            if names != list(ds.pool):
                raise PredictorError(
                    f"profile models {names} do not match the pool {list(ds.pool)}"
                )
            reps_values = reps_matrix(reps)
        else:
            reps_values = reps
    values = predictor.predict(ds.embeddings, reps_values)
    if values.shape != (len(ds), ds.n_models):
        raise PredictorError(f"predictor returned shape {values.shape}, expected {(len(ds), ds.n_models)}")
    bad = np.flatnonzero(~np.isfinite(values).all(axis=1))
    if bad.size:
        raise PredictorError(f"non-finite prediction for query id={ds.records[bad[0]].id!r}")
    return PredictionMatrix(values=values, target=predictor.target)
