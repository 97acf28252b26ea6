"""Per-model expertise profiles from K-means clusters of training queries.

A model's profile is its mean observed quality inside each query cluster,
giving a fixed C-dimensional vector usable as attention keys/values or as
concatenation features. Profiles are built once from the training split and
frozen; adding a model later only requires appending its profile row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import RoutingDataset


class ClusteringError(ValueError):
    """Raised on invalid clustering inputs."""


@dataclass(frozen=True)
class ClusterModel:
    """Fitted centroids with a deterministic nearest-centroid assignment rule."""

    centroids: np.ndarray  # (C, dim)
    seed: int
    inertia: float
    n_iter: int

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    def assign(self, points: np.ndarray) -> np.ndarray:
        """Nearest centroid by Euclidean distance; ties go to the lowest index."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != self.centroids.shape[1]:
            raise ClusteringError(
                f"point dimension {points.shape[1]} != centroid dimension {self.centroids.shape[1]}"
            )
        return np.argmin(_sq_dists(points, self.centroids), axis=1)


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # |x - c|^2 expanded; clip guards tiny negative values from cancellation
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    return np.clip(d2, 0.0, None)


def _plusplus_init(points: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((c, points.shape[1]), dtype=np.float64)
    centers[0] = points[rng.integers(n)]
    d2 = _sq_dists(points, centers[:1]).ravel()
    for j in range(1, c):
        probs = d2 / d2.sum()
        centers[j] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, _sq_dists(points, centers[j : j + 1]).ravel())
    return centers


def kmeans(
    embeddings: list[np.ndarray] | np.ndarray,
    n_clusters: int,
    seed: int,
    max_iters: int = 100,
) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when assignments are unchanged or at max_iters. Clusters that
    empty out are re-seeded with the point currently farthest from its
    centroid. Inertia (sum of squared distances at assignment time) is
    checked to be non-increasing across iterations.
    """
    points = np.asarray(embeddings, dtype=np.float64)
    if points.ndim != 2:
        points = np.atleast_2d(points)
    n = points.shape[0]
    if n_clusters < 1:
        raise ClusteringError(f"n_clusters must be >= 1, got {n_clusters}")
    if n < n_clusters:
        raise ClusteringError(f"{n} points cannot support {n_clusters} clusters")
    if np.unique(points, axis=0).shape[0] < n_clusters:
        raise ClusteringError(f"fewer than {n_clusters} distinct points after deduplication")

    rng = np.random.default_rng(seed)
    centers = _plusplus_init(points, n_clusters, rng)

    labels = None
    inertia = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        d2 = _sq_dists(points, centers)
        new_labels = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(n), new_labels]
        new_inertia = float(point_d2.sum())
        if new_inertia > inertia * (1.0 + 1e-9) + 1e-12:
            raise AssertionError(
                f"inertia increased at iteration {it}: {inertia} -> {new_inertia}"
            )
        inertia = new_inertia
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels

        counts = np.bincount(labels, minlength=n_clusters)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]

        if not nonempty.all():
            avail = point_d2.copy()
            for j in np.flatnonzero(~nonempty):
                far = int(np.argmax(avail))
                centers[j] = points[far]
                avail[far] = -math.inf  # one reseed per point
    return ClusterModel(centroids=centers, seed=seed, inertia=inertia, n_iter=it)


def elbow_index(inertias: list[float]) -> int:
    """Index of the largest second difference; first interior index on ties."""
    if len(inertias) < 3:
        raise ClusteringError("elbow test needs at least 3 candidate counts")
    best_idx, best_curv = 1, -math.inf
    for i in range(1, len(inertias) - 1):
        curv = inertias[i - 1] - 2.0 * inertias[i] + inertias[i + 1]
        if curv > best_curv:
            best_idx, best_curv = i, curv
    return best_idx


def select_cluster_count(
    embeddings: list[np.ndarray] | np.ndarray,
    candidates: list[int],
    seed: int,
    max_iters: int = 100,
) -> int:
    """Discrete elbow test: the candidate maximizing the second difference
    of inertia over the candidate sequence. Ties pick the smaller count."""
    if len(candidates) < 3:
        raise ClusteringError("elbow test needs at least 3 candidate counts")
    if any(c < 1 for c in candidates) or sorted(candidates) != list(candidates):
        raise ClusteringError("candidates must be ascending and >= 1")
    inertias = [kmeans(embeddings, c, seed, max_iters).inertia for c in candidates]
    return candidates[elbow_index(inertias)]


@dataclass(frozen=True)
class ModelRepresentation:
    """Cluster-skill profile: mean quality per cluster plus sample support."""

    model: str
    values: np.ndarray  # (C,) in [0, 1]
    support: np.ndarray  # (C,) sampled prompt counts


def build_representations(
    train: RoutingDataset,
    clusters: ClusterModel,
    sample_frac: float = 0.2,
    seed: int = 0,
) -> list[ModelRepresentation]:
    """Profile every pool model over the training clusters.

    Per cluster, ceil(sample_frac * size) prompts are drawn without
    replacement (seeded) and the model's quality is averaged over the
    sample. A cluster with no members falls back to the model's global
    training mean with support 0.
    """
    if len(train) == 0:
        raise ClusteringError("cannot build representations from an empty training set")
    if not (0.0 < sample_frac <= 1.0):
        raise ClusteringError(f"sample_frac must be in (0, 1], got {sample_frac}")
    labels = clusters.assign(train.embeddings)
    quality = train.quality_matrix  # (n, K)
    global_mean = quality.mean(axis=0)

    rng = np.random.default_rng(seed)
    c = clusters.n_clusters
    values = np.zeros((len(train.pool), c))
    support = np.zeros(c, dtype=np.int64)
    for j in range(c):
        members = np.flatnonzero(labels == j)
        if members.size == 0:
            values[:, j] = global_mean
            continue
        m = math.ceil(sample_frac * members.size)
        picked = rng.choice(members, size=m, replace=False)
        values[:, j] = quality[picked].mean(axis=0)
        support[j] = m
    return [
        ModelRepresentation(model=name, values=values[i].copy(), support=support.copy())
        for i, name in enumerate(train.pool)
    ]


def reps_matrix(reps: list[ModelRepresentation]) -> np.ndarray:
    """Stack profiles into a (K, C) matrix in list order."""
    return np.array([r.values for r in reps], dtype=np.float64)


def save_representations(reps: list[ModelRepresentation], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    c = len(reps[0].values)
    header = ["model"] + [f"v{j}" for j in range(c)] + [f"n{j}" for j in range(c)]
    lines = ["\t".join(header)]
    for r in reps:
        cells = [r.model] + [repr(float(v)) for v in r.values] + [str(int(s)) for s in r.support]
        lines.append("\t".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_representations(path: str | Path) -> list[ModelRepresentation]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split("\t")
    c = (len(header) - 1) // 2
    if len(header) != 1 + 2 * c:
        raise ClusteringError(f"malformed representations header in {path}")
    reps = []
    for line in lines[1:]:
        cells = line.split("\t")
        if len(cells) != len(header):
            raise ClusteringError(f"malformed representations row in {path}")
        reps.append(
            ModelRepresentation(
                model=cells[0],
                values=np.array([float(v) for v in cells[1 : 1 + c]]),
                support=np.array([int(v) for v in cells[1 + c :]]),
            )
        )
    return reps
