import math

import numpy as np
import pytest

from routekit.predictors import (
    AttentionParams,
    AttentionPredictor,
    attention_forward,
    init_attention_params,
    softmax,
)


def random_instance(seed, d_q=8, d_m=4, d=4, k=3, batch=6):
    rng = np.random.default_rng(seed)
    params = init_attention_params(d_q, d_m, d, seed=seed + 1)
    x = rng.normal(size=(batch, d_q))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    m = rng.uniform(0.0, 1.0, size=(k, d_m))
    t = rng.uniform(0.0, 1.0, size=(batch, k))
    return params, x, m, t


def straight_line_forward(x, m, params, target):
    """Independent re-implementation of the forward chain, plain loops."""
    d = params.w.shape[0]
    q = np.array([sum(x[i] * params.w_q[i, j] for i in range(len(x))) for j in range(d)])
    preds = []
    ks, vs = [], []
    for row in m:
        ks.append(np.array([sum(row[i] * params.w_k[i, j] for i in range(len(row))) for j in range(d)]))
        vs.append(np.array([sum(row[i] * params.w_v[i, j] for i in range(len(row))) for j in range(d)]))
    z = [sum(q[j] * ks[i][j] for j in range(d)) / math.sqrt(d) for i in range(len(m))]
    zmax = max(z)
    exps = [math.exp(v - zmax) for v in z]
    alpha = [e / sum(exps) for e in exps]
    ctx = [sum(alpha[i] * vs[i][j] for i in range(len(m))) for j in range(d)]
    for i in range(len(m)):
        raw = sum(params.w[j] * ctx[j] * vs[i][j] for j in range(d))
        raw += sum(params.u[j] * q[j] * ks[i][j] for j in range(d))
        raw += float(params.b)
        preds.append(1.0 / (1.0 + math.exp(-raw)) if target == "quality" else math.log1p(math.exp(raw)))
    return np.array(preds), np.array(alpha)


class TestForward:
    def test_matches_straight_line_reimplementation(self):
        params, x, m, _ = random_instance(0)
        got, cache = attention_forward(x[0], m, params, "quality")
        want, alpha = straight_line_forward(x[0], m, params, "quality")
        assert np.abs(got - want).max() < 1e-12
        assert np.abs(cache["alpha"] - alpha).max() < 1e-12
        assert abs(cache["alpha"].sum() - 1.0) < 1e-12

    def test_zero_key_projection_gives_uniform_attention(self):
        params, x, m, _ = random_instance(1)
        params.w_k[:] = 0.0
        _, cache = attention_forward(x[0], m, params, "quality")
        assert np.abs(cache["alpha"] - 1.0 / m.shape[0]).max() < 1e-15

    def test_single_model_attends_fully(self):
        params, x, m, _ = random_instance(2, k=1)
        _, cache = attention_forward(x[0], m[:1], params, "quality")
        assert cache["alpha"].tolist() == [1.0]
        assert np.array_equal(cache["ctx"], cache["v"][0])

    def test_permutation_equivariance_is_exact(self):
        rng = np.random.default_rng(3)
        for trial in range(25):
            params, x, m, _ = random_instance(trial + 10, k=5)
            pred, _ = attention_forward(x[0], m, params, "quality")
            perm = rng.permutation(5)
            pred_perm, _ = attention_forward(x[0], m[perm], params, "quality")
            assert np.array_equal(pred[perm], pred_perm)

    def test_batch_matches_per_query_loop(self):
        params, x, m, _ = random_instance(4, batch=100)
        model = AttentionPredictor(params, "quality")
        batch = model.predict(x, m)
        single = np.array([attention_forward(row, m, params, "quality")[0] for row in x])
        assert np.abs(batch - single).max() < 1e-12

    def test_heads_respect_ranges(self):
        params, x, m, _ = random_instance(5)
        q_pred, _ = attention_forward(x[0], m, params, "quality")
        c_pred, _ = attention_forward(x[0], m, params, "cost")
        assert np.all((q_pred > 0.0) & (q_pred < 1.0))
        assert np.all(c_pred >= 0.0)

    def test_shape_mismatch_rejected(self):
        params, x, m, _ = random_instance(6)
        from routekit.predictors import PredictorError

        with pytest.raises(PredictorError):
            attention_forward(x[0][:4], m, params, "quality")


class TestSoftmax:
    def test_sums_to_one_and_shift_invariant(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            z = rng.normal(size=rng.integers(2, 9)) * 3.0
            a = softmax(z)
            assert abs(a.sum() - 1.0) < 1e-12
            assert np.all(a >= 0.0)
            shift = rng.uniform(-10, 10)
            assert np.abs(softmax(z + shift) - a).max() < 1e-12


class TestGradients:
    def test_analytic_matches_finite_differences(self):
        params, x, m, t = random_instance(7)
        model = AttentionPredictor(params, "quality")
        _, grads = model.loss_and_grads(x, t, m)
        h = 1e-5
        for key, p in model.get_params().items():
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                ix = it.multi_index
                orig = p[ix]
                p[ix] = orig + h
                lp, _ = model.loss_and_grads(x, t, m)
                p[ix] = orig - h
                lm, _ = model.loss_and_grads(x, t, m)
                p[ix] = orig
                fd = (lp - lm) / (2 * h)
                rel = abs(grads[key][ix] - fd) / max(abs(grads[key][ix]), abs(fd), 1e-6)
                assert rel < 1e-4, f"gradient mismatch for {key}[{ix}]"

    def test_cost_head_gradients(self):
        params, x, m, t = random_instance(8)
        model = AttentionPredictor(params, "cost")
        loss, grads = model.loss_and_grads(x, t * 0.01, m)
        assert math.isfinite(loss)
        h = 1e-5
        p = model.get_params()["w"]
        orig = p[0]
        p[0] = orig + h
        lp, _ = model.loss_and_grads(x, t * 0.01, m)
        p[0] = orig - h
        lm, _ = model.loss_and_grads(x, t * 0.01, m)
        p[0] = orig
        fd = (lp - lm) / (2 * h)
        assert abs(grads["w"][0] - fd) / max(abs(fd), 1e-8) < 1e-3
