import numpy as np
import pytest

from routekit.dataset import SynthSpec, synth_generate
from routekit.representations import (
    ClusterModel,
    ClusteringError,
    build_representations,
    elbow_index,
    kmeans,
    reps_matrix,
    load_representations,
    save_representations,
    select_cluster_count,
)

from conftest import make_dataset


class TestKMeans:
    def test_exact_fit_two_points(self):
        cm = kmeans([[0.0, 0.0], [0.0, 1.0]], 2, seed=0)
        assert cm.inertia == 0.0
        got = sorted(map(tuple, cm.centroids))
        assert got == [(0.0, 0.0), (0.0, 1.0)]

    def test_single_cluster_is_mean(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]])
        cm = kmeans(pts, 1, seed=0)
        assert np.allclose(cm.centroids[0], pts.mean(axis=0), atol=1e-12)

    def test_recovers_separated_gaussians(self):
        rng = np.random.default_rng(42)
        centers = np.array([[10.0, 0.0], [-10.0, 0.0], [0.0, 10.0]])
        labels_true = np.repeat([0, 1, 2], 20)
        pts = centers[labels_true] + 0.1 * rng.normal(size=(60, 2))
        cm = kmeans(pts, 3, seed=1)
        labels = cm.assign(pts)
        # same partition up to relabeling
        for g in range(3):
            assert len(set(labels[labels_true == g])) == 1
        assert len(set(labels)) == 3

    def test_deduplication_error(self):
        pts = [[0.0, 0.0]] * 5 + [[1.0, 1.0]]
        with pytest.raises(ClusteringError, match="distinct"):
            kmeans(pts, 3, seed=0)

    def test_too_few_points(self):
        with pytest.raises(ClusteringError):
            kmeans([[0.0, 1.0]], 2, seed=0)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(80, 5))
        a = kmeans(pts, 4, seed=9)
        b = kmeans(pts, 4, seed=9)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.inertia == b.inertia

    def test_assignment_tie_breaks_low_index(self):
        cm = ClusterModel(
            centroids=np.array([[1.0, 0.0], [-1.0, 0.0]]), seed=0, inertia=0.0, n_iter=0
        )
        assert cm.assign(np.array([[0.0, 5.0]]))[0] == 0  # equidistant


class TestElbow:
    def test_hand_computed_second_difference(self):
        # second differences: 100-40+18 = 78 at index 1, 20-36+17 = 1 at index 2
        assert elbow_index([100.0, 20.0, 18.0, 17.0]) == 1

    def test_linear_decay_ties_to_first_interior(self):
        assert elbow_index([40.0, 30.0, 20.0, 10.0]) == 1

    def test_recovers_generating_cluster_count(self):
        rng = np.random.default_rng(7)
        centers = rng.normal(size=(20, 8)) * 10.0
        pts = np.repeat(centers, 30, axis=0) + 0.05 * rng.normal(size=(600, 8))
        assert select_cluster_count(pts, [5, 10, 20, 40], seed=0) == 20

    def test_needs_three_candidates(self):
        with pytest.raises(ClusteringError):
            select_cluster_count(np.eye(4), [1, 2], seed=0)


class TestRepresentations:
    def test_single_cluster_full_sample_is_global_mean(self, two_model_ds):
        cm = kmeans(two_model_ds.embeddings, 1, seed=0)
        reps = build_representations(two_model_ds, cm, sample_frac=1.0, seed=0)
        expected = two_model_ds.quality_matrix.mean(axis=0)
        for i, rep in enumerate(reps):
            assert rep.values.shape == (1,)
            assert abs(rep.values[0] - expected[i]) < 1e-12
            assert rep.support[0] == 4

    def test_constant_quality_model(self):
        ds = make_dataset(
            [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
            [[1.0, 0.3], [1.0, 0.6], [1.0, 0.1], [1.0, 0.9]],
            [[0.1, 0.2]] * 4,
        )
        cm = kmeans(ds.embeddings, 2, seed=0)
        reps = build_representations(ds, cm, sample_frac=0.5, seed=1)
        assert np.all(reps[0].values == 1.0)

    def test_two_cluster_exact_means(self):
        # cluster A = first two queries, cluster B = last two
        ds = make_dataset(
            [[5.0, 0.0], [5.1, 0.0], [-5.0, 0.0], [-5.1, 0.0]],
            [[0.2, 0.9], [0.4, 0.7], [0.6, 0.1], [0.8, 0.3]],
            [[0.1, 0.2]] * 4,
        )
        cm = kmeans(ds.embeddings, 2, seed=0)
        reps = build_representations(ds, cm, sample_frac=1.0, seed=0)
        labels = cm.assign(ds.embeddings)
        for j in range(2):
            members = labels == j
            expected = ds.quality_matrix[members].mean(axis=0)
            for i in range(2):
                assert abs(reps[i].values[j] - expected[i]) < 1e-12

    def test_empty_cluster_imputed_with_global_mean(self, two_model_ds):
        # second centroid far away from every embedding
        cm = ClusterModel(
            centroids=np.array([[0.5, 0.5], [100.0, 100.0]]), seed=0, inertia=0.0, n_iter=0
        )
        reps = build_representations(two_model_ds, cm, sample_frac=1.0, seed=0)
        global_mean = two_model_ds.quality_matrix.mean(axis=0)
        for i, rep in enumerate(reps):
            assert rep.support[1] == 0
            assert abs(rep.values[1] - global_mean[i]) < 1e-12

    def test_cluster_relabeling_permutes_values(self, two_model_ds):
        cm = kmeans(two_model_ds.embeddings, 2, seed=0)
        swapped = ClusterModel(
            centroids=cm.centroids[::-1].copy(), seed=0, inertia=cm.inertia, n_iter=cm.n_iter
        )
        a = build_representations(two_model_ds, cm, sample_frac=1.0, seed=0)
        b = build_representations(two_model_ds, swapped, sample_frac=1.0, seed=0)
        for ra, rb in zip(a, b):
            assert np.allclose(ra.values, rb.values[::-1], atol=1e-12)

    def test_sampling_is_seeded(self):
        ds = synth_generate(SynthSpec(n=100, models=3, dim=6, clusters=4, noise=0.2), seed=0)
        cm = kmeans(ds.embeddings, 4, seed=0)
        a = build_representations(ds, cm, sample_frac=0.3, seed=5)
        b = build_representations(ds, cm, sample_frac=0.3, seed=5)
        c = build_representations(ds, cm, sample_frac=0.3, seed=6)
        assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
        assert any(not np.array_equal(x.values, y.values) for x, y in zip(a, c))

    def test_sample_frac_validation(self, two_model_ds):
        cm = kmeans(two_model_ds.embeddings, 1, seed=0)
        with pytest.raises(ClusteringError):
            build_representations(two_model_ds, cm, sample_frac=0.0, seed=0)

    def test_round_trip_tsv(self, tmp_path, two_model_ds):
        cm = kmeans(two_model_ds.embeddings, 2, seed=0)
        reps = build_representations(two_model_ds, cm, sample_frac=1.0, seed=0)
        save_representations(reps, tmp_path / "reps.tsv")
        back = load_representations(tmp_path / "reps.tsv")
        assert [r.model for r in back] == [r.model for r in reps]
        assert np.array_equal(reps_matrix(back), reps_matrix(reps))
        assert all(np.array_equal(a.support, b.support) for a, b in zip(reps, back))
