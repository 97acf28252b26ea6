"""Shared predictor machinery: configs, output heads, init, serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

ARCHITECTURES = (
    "attention",
    "regression",
    "fcn2",
    "fcn3",
    "regression_emb",
    "fcn2_emb",
    "fcn3_emb",
    "knn",
)
TARGETS = ("quality", "cost")

_HIDDEN_DEFAULTS = {"fcn2": (256,), "fcn3": (256, 64), "fcn2_emb": (256,), "fcn3_emb": (256, 64)}
# stated training recipe: quality predictors at 1e-3 / 1e-5, cost predictors at 1e-4 / 1e-7
_LR_DEFAULTS = {"quality": 1e-3, "cost": 1e-4}
_WD_DEFAULTS = {"quality": 1e-5, "cost": 1e-7}


class PredictorError(ValueError):
    """Invalid predictor configuration or input."""


@dataclass(frozen=True)
class PredictorConfig:
    architecture: str
    target: str
    internal_dim: int = 20
    hidden_dims: tuple[int, ...] | None = None
    learning_rate: float | None = None
    batch_size: int = 1024
    weight_decay: float | None = None
    epochs: int = 1000
    seed: int = 0
    k_neighbors: int = 20

    def resolved(self) -> "PredictorConfig":
        """Fill architecture/target-dependent defaults and validate."""
        if self.architecture not in ARCHITECTURES:
            raise PredictorError(f"unknown architecture {self.architecture!r}")
        if self.target not in TARGETS:
            raise PredictorError(f"unknown target {self.target!r}")
        hidden = self.hidden_dims
        if hidden is None:
            hidden = _HIDDEN_DEFAULTS.get(self.architecture, ())
        lr = self.learning_rate if self.learning_rate is not None else _LR_DEFAULTS[self.target]
        wd = self.weight_decay if self.weight_decay is not None else _WD_DEFAULTS[self.target]
        cfg = replace(
            self, hidden_dims=tuple(hidden), learning_rate=lr, weight_decay=wd
        )
        if cfg.internal_dim < 1 or cfg.epochs < 1 or cfg.batch_size < 1:
            raise PredictorError("dims, epochs and batch size must be positive")
        if cfg.learning_rate <= 0 or cfg.weight_decay < 0:
            raise PredictorError("learning rate must be > 0 and weight decay >= 0")
        if cfg.k_neighbors < 1:
            raise PredictorError("k_neighbors must be >= 1")
        if any(h < 1 for h in cfg.hidden_dims):
            raise PredictorError(f"hidden dims must be positive: {cfg.hidden_dims}")
        return cfg

    def to_dict(self) -> dict:
        cfg = self.resolved()
        return {
            "architecture": cfg.architecture,
            "target": cfg.target,
            "internal_dim": cfg.internal_dim,
            "hidden_dims": list(cfg.hidden_dims),
            "learning_rate": cfg.learning_rate,
            "batch_size": cfg.batch_size,
            "weight_decay": cfg.weight_decay,
            "epochs": cfg.epochs,
            "seed": cfg.seed,
            "k_neighbors": cfg.k_neighbors,
        }

    @staticmethod
    def from_dict(d: dict) -> "PredictorConfig":
        hidden = d.get("hidden_dims")
        return PredictorConfig(
            architecture=d["architecture"],
            target=d["target"],
            internal_dim=int(d.get("internal_dim", 20)),
            hidden_dims=tuple(hidden) if hidden is not None else None,
            learning_rate=d.get("learning_rate"),
            batch_size=int(d.get("batch_size", 1024)),
            weight_decay=d.get("weight_decay"),
            epochs=int(d.get("epochs", 1000)),
            seed=int(d.get("seed", 0)),
            k_neighbors=int(d.get("k_neighbors", 20)),
        )


# ---------------------------------------------------------------------------
# output heads: quality squashes into (0, 1), cost stays non-negative


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def softplus_inv(y: float) -> float:
    """Inverse of softplus for y > 0, stable for both tails."""
    if y <= 0:
        raise PredictorError(f"softplus_inv needs y > 0, got {y}")
    if y > 30:
        return float(y)
    return float(np.log(np.expm1(y)))


def apply_head(raw: np.ndarray, target: str) -> np.ndarray:
    return sigmoid(raw) if target == "quality" else softplus(raw)


def head_grad(raw: np.ndarray, target: str) -> np.ndarray:
    if target == "quality":
        s = sigmoid(raw)
        return s * (1.0 - s)
    return sigmoid(raw)  # d softplus / dx


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    shifted = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = shape[0] if len(shape) > 1 else shape[0]
    fan_out = shape[1] if len(shape) > 1 else 1
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# ---------------------------------------------------------------------------
# prediction matrices


@dataclass(frozen=True)
class PredictionMatrix:
    """Per-query, per-model predictions with the target's range enforced."""

    values: np.ndarray  # (n, K)
    target: str

    def __post_init__(self) -> None:
        v = self.values
        if not np.all(np.isfinite(v)):
            raise PredictorError("prediction matrix has non-finite entries")
        if self.target == "quality" and (v.min(initial=0.0) < 0.0 or v.max(initial=0.0) > 1.0):
            raise PredictorError("quality predictions must lie in [0, 1]")
        if self.target == "cost" and v.min(initial=0.0) < 0.0:
            raise PredictorError("cost predictions must be non-negative")


# ---------------------------------------------------------------------------
# parameter artifact (versioned binary; rejects shape/architecture mismatch)

ARTIFACT_VERSION = 1


def save_params(path: str | Path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    meta = dict(meta, version=ARTIFACT_VERSION, shapes={k: list(v.shape) for k, v in arrays.items()})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)


def load_params(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with np.load(path, allow_pickle=False) as data:
        if "__meta__" not in data:
            raise PredictorError(f"{path} is not a predictor artifact")
        meta = json.loads(str(data["__meta__"]))
        if meta.get("version") != ARTIFACT_VERSION:
            raise PredictorError(f"unsupported artifact version {meta.get('version')!r}")
        arrays = {k: data[k] for k in data.files if k != "__meta__"}
    for name, shape in meta["shapes"].items():
        if name not in arrays or list(arrays[name].shape) != shape:
            raise PredictorError(f"artifact shape mismatch for {name!r}")
    return meta, arrays
