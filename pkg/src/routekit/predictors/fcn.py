"""Fully connected predictors with rectified-linear hidden layers.

Two flavors:
  * plain: query embedding -> one output per pool model (shared trunk);
  * emb:   [query embedding ; model profile] -> a single score, called once
           per (query, model) pair, so new models need no retraining.
"""

from __future__ import annotations

import numpy as np

from .base import PredictorError, apply_head, glorot_uniform, head_grad


class FCNPredictor:
    def __init__(
        self,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        target: str,
        architecture: str,
        emb: bool,
        config=None,
    ):
        self.weights = weights
        self.biases = biases
        self.target = target
        self.architecture = architecture
        self.emb = emb
        self.config = config

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def _pair_inputs(self, x: np.ndarray, reps_values: np.ndarray) -> np.ndarray:
        k = reps_values.shape[0]
        if x.shape[1] + reps_values.shape[1] != self.input_dim:
            raise PredictorError(
                f"embedding dim {x.shape[1]} + profile dim {reps_values.shape[1]} "
                f"!= network input dim {self.input_dim}"
            )
        return np.concatenate(
            [np.repeat(x, k, axis=0), np.tile(reps_values, (x.shape[0], 1))], axis=1
        )

    def _forward(self, inputs: np.ndarray) -> tuple[np.ndarray, list, list]:
        """Returns (raw outputs, pre-activations, activations)."""
        act = inputs
        pre_acts, acts = [], [act]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            pre = act @ w + b
            act = np.maximum(pre, 0.0)
            pre_acts.append(pre)
            acts.append(act)
        raw = act @ self.weights[-1] + self.biases[-1]
        return raw, pre_acts, acts

    def predict(self, embeddings: np.ndarray, reps_values: np.ndarray | None = None) -> np.ndarray:
        x = np.asarray(embeddings, dtype=np.float64)
        if self.emb:
            if reps_values is None:
                raise PredictorError("emb variant needs model profiles at predict time")
            raw, _, _ = self._forward(self._pair_inputs(x, reps_values))
            raw = raw.reshape(x.shape[0], reps_values.shape[0])
        else:
            if x.shape[1] != self.input_dim:
                raise PredictorError(f"embedding dim {x.shape[1]} != input dim {self.input_dim}")
            raw, _, _ = self._forward(x)
        return apply_head(raw, self.target)

    def predict_pair(self, embedding: np.ndarray, rep_values: np.ndarray) -> float:
        inp = np.concatenate([np.asarray(embedding, dtype=np.float64), rep_values])[None, :]
        if inp.shape[1] != self.input_dim:
            raise PredictorError(f"pair input dim {inp.shape[1]} != network input dim {self.input_dim}")
        raw, _, _ = self._forward(inp)
        return float(apply_head(raw, self.target)[0, 0])

    def loss_and_grads(
        self, x: np.ndarray, t: np.ndarray, reps_values: np.ndarray | None
    ) -> tuple[float, dict[str, np.ndarray]]:
        if self.emb:
            inputs = self._pair_inputs(x, reps_values)
            targets = t.reshape(-1, 1)
        else:
            inputs, targets = x, t
        raw, pre_acts, acts = self._forward(inputs)
        resid = apply_head(raw, self.target) - targets
        loss = float(np.mean(resid**2))

        delta = (2.0 / resid.size) * resid * head_grad(raw, self.target)
        grads: dict[str, np.ndarray] = {}
        for layer in range(len(self.weights) - 1, -1, -1):
            grads[f"w{layer}"] = acts[layer].T @ delta
            grads[f"b{layer}"] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * (pre_acts[layer - 1] > 0.0)
        return loss, grads

    # --- parameter plumbing ---

    def get_params(self) -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def set_params(self, values: dict[str, np.ndarray]) -> None:
        n = len(self.weights)
        self.weights = [values[f"w{i}"].copy() for i in range(n)]
        self.biases = [values[f"b{i}"].copy() for i in range(n)]

    def meta(self) -> dict:
        return {
            "architecture": self.architecture,
            "target": self.target,
            "emb": self.emb,
            "n_layers": len(self.weights),
            "config": self.config.to_dict() if self.config else None,
        }

    @staticmethod
    def from_arrays(meta: dict, arrays: dict[str, np.ndarray], config=None) -> "FCNPredictor":
        n = int(meta["n_layers"])
        return FCNPredictor(
            weights=[arrays[f"w{i}"] for i in range(n)],
            biases=[arrays[f"b{i}"] for i in range(n)],
            target=meta["target"],
            architecture=meta["architecture"],
            emb=bool(meta["emb"]),
            config=config,
        )


def init_fcn(
    input_dim: int,
    hidden_dims: tuple[int, ...],
    output_dim: int,
    target: str,
    architecture: str,
    emb: bool,
    seed: int,
    output_bias: np.ndarray | float = 0.0,
    config=None,
) -> FCNPredictor:
    rng = np.random.default_rng(seed)
    dims = [input_dim, *hidden_dims, output_dim]
    weights = [glorot_uniform(rng, (dims[i], dims[i + 1])) for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    biases[-1] = biases[-1] + np.asarray(output_bias, dtype=np.float64)
    return FCNPredictor(weights, biases, target, architecture, emb, config)
