"""Dataset model, line-record ingestion, deterministic splits, synthetic benchmarks.

The canonical on-disk form is a UTF-8 JSONL file (one query per line) plus a
sidecar manifest listing the model pool in canonical order and the embedding
dimension. Costs are absolute USD; quality scores live in [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """A dataset file or record violates the format contract."""


@dataclass(frozen=True)
class QueryRecord:
    """One query: embedding plus per-model ground-truth quality and cost."""

    id: str
    group: str
    embedding: np.ndarray  # (dim,) float64
    quality: dict[str, float]  # model name -> score in [0, 1]
    cost: dict[str, float]  # model name -> USD, >= 0


@dataclass(frozen=True)
class RoutingDataset:
    """Immutable collection of queries sharing one model pool.

    Matrix views are cached and marked read-only; rows follow record order,
    columns follow pool order.
    """

    pool: tuple[str, ...]
    dim: int
    records: tuple[QueryRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def n_models(self) -> int:
        return len(self.pool)

    @cached_property
    def embeddings(self) -> np.ndarray:
        out = np.array([r.embedding for r in self.records], dtype=np.float64)
        out = out.reshape(len(self.records), self.dim)
        out.flags.writeable = False
        return out

    @cached_property
    def quality_matrix(self) -> np.ndarray:
        out = np.array(
            [[r.quality[m] for m in self.pool] for r in self.records], dtype=np.float64
        ).reshape(len(self.records), len(self.pool))
        out.flags.writeable = False
        return out

    @cached_property
    def cost_matrix(self) -> np.ndarray:
        out = np.array(
            [[r.cost[m] for m in self.pool] for r in self.records], dtype=np.float64
        ).reshape(len(self.records), len(self.pool))
        out.flags.writeable = False
        return out

    def validate(self) -> None:
        if not self.pool:
            raise DatasetError("model pool is empty")
        if len(set(self.pool)) != len(self.pool):
            raise DatasetError("model pool contains duplicate names")
        if self.dim < 1:
            raise DatasetError(f"embedding dimension must be >= 1, got {self.dim}")
        pool_set = set(self.pool)
        for i, rec in enumerate(self.records):
            _validate_record(rec, pool_set, self.dim, where=f"record {i} (id={rec.id!r})")

    def subset_pool(self, pool: list[str] | tuple[str, ...]) -> "RoutingDataset":
        """Restrict to a model subset, keeping canonical pool order."""
        missing = [m for m in pool if m not in self.pool]
        if missing:
            raise DatasetError(f"models not in pool: {missing}")
        keep = tuple(m for m in self.pool if m in set(pool))
        records = tuple(
            replace(
                r,
                quality={m: r.quality[m] for m in keep},
                cost={m: r.cost[m] for m in keep},
            )
            for r in self.records
        )
        return RoutingDataset(pool=keep, dim=self.dim, records=records)

    def take(self, indices: np.ndarray) -> "RoutingDataset":
        records = tuple(self.records[int(i)] for i in indices)
        return RoutingDataset(pool=self.pool, dim=self.dim, records=records)


def _validate_record(rec: QueryRecord, pool_set: set[str], dim: int, where: str) -> None:
    emb = rec.embedding
    if emb.shape != (dim,):
        raise DatasetError(f"{where}: embedding has {emb.shape[0] if emb.ndim == 1 else emb.shape} entries, expected {dim}")
    if not np.all(np.isfinite(emb)):
        raise DatasetError(f"{where}: embedding has non-finite entries")
    if float(np.dot(emb, emb)) == 0.0:
        raise DatasetError(f"{where}: embedding is the zero vector")
    if set(rec.quality) != pool_set or set(rec.cost) != pool_set:
        raise DatasetError(f"{where}: quality/cost model names do not match the pool")
    for m in pool_set:
        q = rec.quality[m]
        c = rec.cost[m]
        if not (math.isfinite(q) and 0.0 <= q <= 1.0):
            raise DatasetError(f"{where}: quality out of range for {m}: {q}")
        if not (math.isfinite(c) and c >= 0.0):
            raise DatasetError(f"{where}: negative or non-finite cost for {m}: {c}")


# ---------------------------------------------------------------------------
# canonical file format


def manifest_path_for(data_path: str | Path) -> Path:
    p = Path(data_path)
    return p.with_name(p.stem + ".manifest.json") if p.suffix else p.with_name(p.name + ".manifest.json")


def save_dataset(ds: RoutingDataset, path: str | Path) -> None:
    """Write the JSONL records and the sidecar pool manifest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in ds.records:
            obj = {
                "id": rec.id,
                "group": rec.group,
                "embedding": [float(v) for v in rec.embedding],
                "quality": {m: float(rec.quality[m]) for m in ds.pool},
                "cost": {m: float(rec.cost[m]) for m in ds.pool},
            }
            fh.write(json.dumps(obj) + "\n")
    manifest = {"pool": list(ds.pool), "embedding_dim": ds.dim}
    manifest_path_for(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def load_dataset(path: str | Path, pool: list[str] | None = None) -> RoutingDataset:
    """Load and validate a canonical dataset file.

    Errors carry the 1-based line number of the offending record. `pool`
    optionally restricts to a model subset at load time.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    mpath = manifest_path_for(path)
    if not mpath.exists():
        raise DatasetError(f"pool manifest not found: {mpath}")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
        full_pool = [str(m) for m in manifest["pool"]]
        dim = int(manifest["embedding_dim"])
    except (KeyError, ValueError, TypeError) as exc:
        raise DatasetError(f"malformed manifest {mpath}: {exc}") from exc

    records = []
    pool_set = set(full_pool)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec = QueryRecord(
                    id=str(obj["id"]),
                    group=str(obj.get("group", "")),
                    embedding=np.asarray(obj["embedding"], dtype=np.float64),
                    quality={str(k): float(v) for k, v in obj["quality"].items()},
                    cost={str(k): float(v) for k, v in obj["cost"].items()},
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise DatasetError(f"malformed record at line {lineno}: {exc}") from exc
            try:
                _validate_record(rec, pool_set, dim, where=f"line {lineno}")
            except DatasetError:
                raise
            records.append(rec)

    ds = RoutingDataset(pool=tuple(full_pool), dim=dim, records=tuple(records))
    if not ds.pool:
        raise DatasetError("manifest pool is empty")
    if pool is not None:
        ds = ds.subset_pool(pool)
    return ds


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.75
    val_frac: float = 0.05
    test_frac: float = 0.20
    seed: int = 0

    def validate(self) -> None:
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise DatasetError(f"split fractions must be positive: {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise DatasetError(f"split fractions must sum to 1: {fracs}")


def split(
    ds: RoutingDataset, spec: SplitSpec
) -> tuple[RoutingDataset, RoutingDataset, RoutingDataset]:
    """Seeded shuffle, then contiguous train/val/test slices.

    Sizes use floor allocation per fraction; remainder rows go to train so
    val/test sizes stay stable as n grows.
    """
    spec.validate()
    n = len(ds)
    if n < 3:
        raise DatasetError(f"need at least 3 records to split, got {n}")
    n_train = int(n * spec.train_frac)
    n_val = int(n * spec.val_frac)
    n_test = int(n * spec.test_frac)
    n_train += n - (n_train + n_val + n_test)
    if min(n_train, n_val, n_test) < 1:
        raise DatasetError(
            f"n={n} too small for fractions "
            f"({spec.train_frac}, {spec.val_frac}, {spec.test_frac})"
        )
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    return (
        ds.take(perm[:n_train]),
        ds.take(perm[n_train : n_train + n_val]),
        ds.take(perm[n_train + n_val :]),
    )


# ---------------------------------------------------------------------------
# embedding normalization


def normalize_embeddings(ds: RoutingDataset) -> RoutingDataset:
    """Scale every embedding to unit Euclidean norm. Pure and idempotent."""
    records = []
    for i, rec in enumerate(ds.records):
        norm = float(np.linalg.norm(rec.embedding))
        if not math.isfinite(norm) or norm == 0.0:
            raise DatasetError(f"record {i} (id={rec.id!r}): zero or non-finite embedding")
        records.append(replace(rec, embedding=rec.embedding / norm))
    return RoutingDataset(pool=ds.pool, dim=ds.dim, records=tuple(records))


# ---------------------------------------------------------------------------
# synthetic benchmark generator


@dataclass(frozen=True)
class SynthSpec:
    """Desk-scale synthetic routing benchmark.

    Embeddings fall in `clusters` Gaussian clumps on the unit sphere. Each
    model carries a latent skill per cluster and a per-query cost around its
    base price. Cluster g is "owned" by model g mod K, whose skill there
    beats every other model, so no single model dominates the whole space.
    Base prices are heterogeneous: a tightly priced budget tier plus a
    geometrically spread premium tier.
    """

    n: int
    models: int
    dim: int = 16
    clusters: int = 8
    noise: float = 0.05
    cluster_spread: float = 0.25
    cost_low: float = 1e-4
    cost_high: float = 2.5e-2
    cost_jitter: float = 0.1

    def validate(self) -> None:
        if self.n < self.models:
            raise DatasetError(f"need n >= models, got n={self.n}, models={self.models}")
        if self.clusters < 1:
            raise DatasetError(f"clusters must be >= 1, got {self.clusters}")
        if self.models < 1 or self.dim < 1:
            raise DatasetError("models and dim must be >= 1")
        if self.noise < 0 or self.cost_low <= 0 or self.cost_high < self.cost_low:
            raise DatasetError("invalid noise or cost range")


def _base_costs(spec: SynthSpec) -> np.ndarray:
    k = spec.models
    n_budget = max(1, (k + 1) // 2)
    if n_budget == 1:
        budget = np.array([spec.cost_low])
    else:
        budget = np.geomspace(spec.cost_low, 1.8 * spec.cost_low, num=n_budget)
    n_premium = k - n_budget
    if n_premium == 0:
        return budget
    if n_premium == 1:
        premium = np.array([spec.cost_high])
    else:
        premium = np.geomspace(12.0 * spec.cost_low, spec.cost_high, num=n_premium)
    return np.concatenate([budget, premium])


def synth_generate(spec: SynthSpec, seed: int) -> RoutingDataset:
    """Generate a seeded synthetic dataset. Pure function of (spec, seed)."""
    spec.validate()
    rng = np.random.default_rng(seed)
    n, k, g = spec.n, spec.models, spec.clusters

    # latent skills: shared per-cluster difficulty + per-model ability + idiosyncrasy
    difficulty = rng.uniform(0.15, 0.75, size=g)
    ability = np.sort(rng.uniform(-0.15, 0.20, size=k))  # pricier models trend stronger
    idio = rng.uniform(-0.18, 0.18, size=(k, g))
    skill = np.clip(difficulty[None, :] + ability[:, None] + idio, 0.03, 0.85)
    for j in range(g):
        skill[j % k, j] = rng.uniform(0.88, 0.97)  # owner is strictly top in its cluster

    base_cost = _base_costs(spec)

    centers = rng.normal(size=(g, spec.dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    labels = rng.permutation(np.arange(n) % g)

    records = []
    pool = tuple(f"m{i}" for i in range(k))
    for i in range(n):
        c = int(labels[i])
        x = centers[c] + spec.cluster_spread * rng.normal(size=spec.dim)
        x /= np.linalg.norm(x)
        q = np.clip(skill[:, c] + spec.noise * rng.normal(size=k), 0.0, 1.0)
        jitter = rng.lognormal(mean=math.log(spec.cost_jitter), sigma=0.5, size=k)
        cost = base_cost * (1.0 + jitter)
        records.append(
            QueryRecord(
                id=f"q{i:06d}",
                group=f"cluster{c:02d}",
                embedding=x,
                quality={pool[m]: float(q[m]) for m in range(k)},
                cost={pool[m]: float(cost[m]) for m in range(k)},
            )
        )
    ds = RoutingDataset(pool=pool, dim=spec.dim, records=tuple(records))
    ds.validate()
    return ds
