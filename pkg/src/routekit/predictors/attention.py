"""Single-head cross-attention predictor.

The incoming prompt embedding acts as the attention query; each model's
cluster-skill profile supplies one key and one value. Softmax similarity
weights mix the values into a context vector, and a per-model readout

    raw_i = w . (context * value_i) + u . (query * key_i) + b

turns it into one raw score per model, squashed by the target head. The
first term reads the attention output against each model's value; the
second lets the raw query-key similarity feed the score directly, which
keeps the predictor expressive when the softmax mixture saturates.
Predictions are permutation-equivariant in the model list, and the whole
forward/backward pair is hand-derived numpy.

Shapes: x (d_q,), profiles M (K, C), projections w_q (d_q, d), w_k/w_v (C, d),
readouts w and u (d,), scalar bias b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..representations import ModelRepresentation, reps_matrix
from .base import (
    PredictorError,
    apply_head,
    glorot_uniform,
    head_grad,
    softmax,
)


@dataclass
class AttentionParams:
    w_q: np.ndarray  # (d_q, d)
    w_k: np.ndarray  # (C, d)
    w_v: np.ndarray  # (C, d)
    w: np.ndarray  # (d,) readout over context * value
    u: np.ndarray  # (d,) readout over query * key
    b: np.ndarray  # ()

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "w_q": self.w_q,
            "w_k": self.w_k,
            "w_v": self.w_v,
            "w": self.w,
            "u": self.u,
            "b": self.b,
        }

    def copy(self) -> "AttentionParams":
        return AttentionParams(**{k: v.copy() for k, v in self.as_dict().items()})

    def check_shapes(self, query_dim: int, rep_dim: int) -> None:
        d = self.w_q.shape[1]
        ok = (
            self.w_q.shape == (query_dim, d)
            and self.w_k.shape == (rep_dim, d)
            and self.w_v.shape == (rep_dim, d)
            and self.w.shape == (d,)
            and self.u.shape == (d,)
            and self.b.shape == ()
        )
        if not ok:
            raise PredictorError("attention parameter shapes are inconsistent")


def init_attention_params(
    query_dim: int, rep_dim: int, internal_dim: int, seed: int, bias_init: float = 0.0
) -> AttentionParams:
    rng = np.random.default_rng(seed)
    return AttentionParams(
        w_q=glorot_uniform(rng, (query_dim, internal_dim)),
        w_k=glorot_uniform(rng, (rep_dim, internal_dim)),
        w_v=glorot_uniform(rng, (rep_dim, internal_dim)),
        w=glorot_uniform(rng, (internal_dim,)),
        u=glorot_uniform(rng, (internal_dim,)),
        b=np.array(float(bias_init)),
    )


def attention_forward(
    query_embedding: np.ndarray,
    reps: list[ModelRepresentation] | np.ndarray,
    params: AttentionParams,
    target: str,
) -> tuple[np.ndarray, dict]:
    """Exact single-query forward pass.

    The two reductions over the model axis (softmax normalizer and context
    mixing) use exactly rounded summation, so permuting the model list
    permutes the outputs bitwise. Returns (predictions, cached activations).
    """
    x = np.asarray(query_embedding, dtype=np.float64)
    m = reps if isinstance(reps, np.ndarray) else reps_matrix(reps)
    if x.ndim != 1 or m.ndim != 2:
        raise PredictorError("expected a single embedding and a (K, C) profile matrix")
    params.check_shapes(x.shape[0], m.shape[1])
    d = params.w.shape[0]

    q = x @ params.w_q  # (d,)
    k_mat = m @ params.w_k  # (K, d)
    v_mat = m @ params.w_v  # (K, d)
    z = (k_mat @ q) / math.sqrt(d)  # (K,)
    e = np.exp(z - np.max(z))
    denom = math.fsum(e)
    alpha = e / denom
    weighted = alpha[:, None] * v_mat  # (K, d)
    ctx = np.array([math.fsum(weighted[:, j]) for j in range(d)])
    raw = v_mat @ (params.w * ctx) + k_mat @ (params.u * q) + params.b  # (K,)
    pred = apply_head(raw, target)
    if not np.all(np.isfinite(pred)):
        raise PredictorError("non-finite intermediate in attention forward")
    cache = {"q": q, "k": k_mat, "v": v_mat, "z": z, "alpha": alpha, "ctx": ctx, "raw": raw}
    return pred, cache


def _forward_batch(
    x: np.ndarray, m: np.ndarray, params: AttentionParams, target: str
) -> tuple[np.ndarray, dict]:
    d = params.w.shape[0]
    q = x @ params.w_q  # (B, d)
    k_mat = m @ params.w_k  # (K, d)
    v_mat = m @ params.w_v  # (K, d)
    z = (q @ k_mat.T) / math.sqrt(d)  # (B, K)
    alpha = softmax(z, axis=1)
    ctx = alpha @ v_mat  # (B, d)
    mix = ctx * params.w  # (B, d)
    raw = mix @ v_mat.T + (q * params.u) @ k_mat.T + params.b  # (B, K)
    pred = apply_head(raw, target)
    cache = {"x": x, "m": m, "q": q, "k": k_mat, "v": v_mat, "alpha": alpha, "ctx": ctx, "mix": mix, "raw": raw}
    return pred, cache


class AttentionPredictor:
    architecture = "attention"

    def __init__(self, params: AttentionParams, target: str, config=None):
        self.params = params
        self.target = target
        self.config = config

    def predict(self, embeddings: np.ndarray, reps_values: np.ndarray) -> np.ndarray:
        pred, _ = _forward_batch(np.asarray(embeddings, dtype=np.float64), reps_values, self.params, self.target)
        return pred

    def loss_and_grads(
        self, x: np.ndarray, t: np.ndarray, reps_values: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean squared error over the batch, with analytic gradients.

        Backward mirrors the forward chain: head, readout, context mixing,
        softmax, similarity logits, then the three projections.
        """
        params = self.params
        pred, cache = _forward_batch(x, reps_values, params, self.target)
        b_n, k_n = pred.shape
        resid = pred - t
        loss = float(np.mean(resid**2))

        d_raw = (2.0 / (b_n * k_n)) * resid * head_grad(cache["raw"], self.target)  # (B, K)
        q, k_mat, v_mat = cache["q"], cache["k"], cache["v"]
        alpha, ctx, mix = cache["alpha"], cache["ctx"], cache["mix"]

        db = d_raw.sum()
        d_v_read = d_raw.T @ mix  # (K, d)
        d_mix = d_raw @ v_mat  # (B, d)
        dw = (d_mix * ctx).sum(axis=0)  # (d,)
        d_ctx = d_mix * params.w  # (B, d)

        # query-key readout term: raw += (q * u) @ k^T
        d_raw_k = d_raw @ k_mat  # (B, d)
        du = (q * d_raw_k).sum(axis=0)  # (d,)
        dq = d_raw_k * params.u  # (B, d)
        dk_mat = d_raw.T @ (q * params.u)  # (K, d)

        d_alpha = d_ctx @ v_mat.T  # (B, K)
        d_v_ctx = alpha.T @ d_ctx  # (K, d)
        dz = alpha * (d_alpha - np.sum(d_alpha * alpha, axis=1, keepdims=True))
        dz /= math.sqrt(params.w.shape[0])

        dq += dz @ k_mat  # (B, d)
        dk_mat += dz.T @ q  # (K, d)
        grads = {
            "w_q": cache["x"].T @ dq,
            "w_k": reps_values.T @ dk_mat,
            "w_v": reps_values.T @ (d_v_read + d_v_ctx),
            "w": dw,
            "u": du,
            "b": np.array(db),
        }
        return loss, grads

    # --- parameter plumbing for the trainer and the artifact format ---

    def get_params(self) -> dict[str, np.ndarray]:
        return self.params.as_dict()

    def set_params(self, values: dict[str, np.ndarray]) -> None:
        self.params = AttentionParams(**{k: v.copy() for k, v in values.items()})

    def meta(self) -> dict:
        return {
            "architecture": self.architecture,
            "target": self.target,
            "config": self.config.to_dict() if self.config else None,
        }

    @staticmethod
    def from_arrays(meta: dict, arrays: dict[str, np.ndarray], config=None) -> "AttentionPredictor":
        params = AttentionParams(
            w_q=arrays["w_q"],
            w_k=arrays["w_k"],
            w_v=arrays["w_v"],
            w=arrays["w"],
            u=arrays["u"],
            b=arrays["b"].reshape(()),
        )
        return AttentionPredictor(params, meta["target"], config)
