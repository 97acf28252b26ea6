import numpy as np
import pytest

from routekit.dataset import QueryRecord, RoutingDataset


def make_record(i, embedding, quality, cost, group="g"):
    return QueryRecord(
        id=f"q{i}",
        group=group,
        embedding=np.asarray(embedding, dtype=np.float64),
        quality=dict(quality),
        cost=dict(cost),
    )


def make_dataset(embeddings, quality_rows, cost_rows, pool=None):
    """Hand-build a dataset from parallel lists; rows follow pool order."""
    k = len(quality_rows[0])
    pool = tuple(pool) if pool else tuple(f"m{i}" for i in range(k))
    records = tuple(
        make_record(
            i,
            emb,
            {pool[j]: q[j] for j in range(k)},
            {pool[j]: c[j] for j in range(k)},
        )
        for i, (emb, q, c) in enumerate(zip(embeddings, quality_rows, cost_rows))
    )
    return RoutingDataset(pool=pool, dim=len(embeddings[0]), records=records)


@pytest.fixture
def two_model_ds():
    """4 queries, 2 models; model m1 better but pricier."""
    embeddings = [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8], [0.8, 0.6]]
    quality = [[0.2, 0.9], [0.4, 0.8], [0.3, 0.7], [0.5, 0.6]]
    cost = [[0.001, 0.02], [0.001, 0.03], [0.002, 0.02], [0.001, 0.025]]
    return make_dataset(embeddings, quality, cost)
