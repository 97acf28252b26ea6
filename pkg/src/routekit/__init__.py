"""Cost-aware model routing: predictors, reward policies, Pareto evaluation."""

from .dataset import (
    DatasetError,
    QueryRecord,
    RoutingDataset,
    SplitSpec,
    SynthSpec,
    load_dataset,
    normalize_embeddings,
    save_dataset,
    split,
    synth_generate,
)
from .evaluation import (
    EvaluationError,
    Metrics,
    ParetoCurve,
    SweepPoint,
    aiq,
    default_lambda_grid,
    lambda_sensitivity,
    metrics_report,
    oracle_router,
    pareto_hull,
    prediction_router,
    sweep,
)
from .experiment import ExperimentConfig, StageError, eval_trace, run_experiment
from .representations import (
    ClusterModel,
    ClusteringError,
    ModelRepresentation,
    build_representations,
    kmeans,
    load_representations,
    reps_matrix,
    save_representations,
    select_cluster_count,
)
from .routing import FAMILIES, RewardSpec, RoutingDecision, oracle_route, reward, route

__version__ = "0.1.0"
