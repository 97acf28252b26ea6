"""End-to-end experiment driver: config, pipeline stages, trace files.

A run is fully described by one config (YAML on disk): data source, split,
representation parameters, the two predictor configs, reward family and
lambda grid. Every stage is seeded, so rerunning a config reproduces every
output byte for byte. Stage failures surface as StageError with the stage
name; a FAILED marker flags partial output directories.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .dataset import (
    RoutingDataset,
    SplitSpec,
    SynthSpec,
    load_dataset,
    normalize_embeddings,
    split,
    synth_generate,
)
from .evaluation import (
    Metrics,
    SweepPoint,
    default_lambda_grid,
    metrics_report,
    oracle_router,
    pareto_hull,
    prediction_router,
    sweep,
)
from .predictors import (
    PredictorConfig,
    predict_matrix,
    save_predictor,
    train,
)
from .representations import build_representations, kmeans, save_representations
from .routing import RewardSpec, canonical_family

ABLATION_ARCHS = ("regression", "fcn2", "fcn3", "attention")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RepsParams:
    clusters: int = 20
    sample_frac: float = 0.2
    seed: int = 0


@dataclass
class ExperimentConfig:
    out: str
    seed: int = 0
    data_path: str | None = None
    synth: SynthSpec | None = None
    synth_seed: int | None = None
    pool: list[str] | None = None
    normalize: bool = True
    split_spec: SplitSpec = field(default_factory=SplitSpec)
    reps: RepsParams = field(default_factory=RepsParams)
    quality_predictor: PredictorConfig = field(
        default_factory=lambda: PredictorConfig("attention", "quality")
    )
    cost_predictor: PredictorConfig = field(
        default_factory=lambda: PredictorConfig("attention", "cost")
    )
    reward: str = "r2"
    lambdas: list[float] = field(default_factory=default_lambda_grid)
    strongest_model: str | None = None
    sensitivity_absolute: bool = False
    oracle: bool = False
    ablation: bool = False

    def validate(self) -> None:
        if self.data_path is None and self.synth is None:
            raise ValueError("config needs either a dataset path or a synth spec")
        canonical_family(self.reward)
        self.split_spec.validate()
        if len(self.lambdas) < 3:
            raise ValueError("lambda grid needs at least 3 values")
        self.quality_predictor.resolved()
        self.cost_predictor.resolved()

    # --- serialization ---

    def to_dict(self) -> dict:
        d: dict = {
            "out": self.out,
            "seed": self.seed,
            "normalize": self.normalize,
            "reward": canonical_family(self.reward),
            "lambda_grid": [float(v) for v in self.lambdas],
            "strongest_model": self.strongest_model,
            "sensitivity_absolute": self.sensitivity_absolute,
            "oracle": self.oracle,
            "ablation": self.ablation,
            "split": {
                "train": self.split_spec.train_frac,
                "val": self.split_spec.val_frac,
                "test": self.split_spec.test_frac,
                "seed": self.split_spec.seed,
            },
            "representations": {
                "clusters": self.reps.clusters,
                "sample_frac": self.reps.sample_frac,
                "seed": self.reps.seed,
            },
            "quality_predictor": self.quality_predictor.to_dict(),
            "cost_predictor": self.cost_predictor.to_dict(),
        }
        if self.pool is not None:
            d["pool"] = list(self.pool)
        if self.data_path is not None:
            d["data"] = {"path": self.data_path}
        else:
            s = self.synth
            d["data"] = {
                "synth": {
                    "n": s.n,
                    "models": s.models,
                    "dim": s.dim,
                    "clusters": s.clusters,
                    "noise": s.noise,
                    "cluster_spread": s.cluster_spread,
                    "cost_low": s.cost_low,
                    "cost_high": s.cost_high,
                    "cost_jitter": s.cost_jitter,
                    "seed": self.synth_seed if self.synth_seed is not None else self.seed,
                }
            }
        return d

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        seed = int(d.get("seed", 0))
        data = d.get("data", {}) or {}
        synth = None
        synth_seed = None
        data_path = data.get("path")
        if "synth" in data:
            s = data["synth"]
            synth = SynthSpec(
                n=int(s["n"]),
                models=int(s["models"]),
                dim=int(s.get("dim", 16)),
                clusters=int(s.get("clusters", 8)),
                noise=float(s.get("noise", 0.05)),
                cluster_spread=float(s.get("cluster_spread", 0.25)),
                cost_low=float(s.get("cost_low", 1e-4)),
                cost_high=float(s.get("cost_high", 2.5e-2)),
                cost_jitter=float(s.get("cost_jitter", 0.1)),
            )
            synth_seed = int(s["seed"]) if "seed" in s else None
        sp = d.get("split", {}) or {}
        split_spec = SplitSpec(
            train_frac=float(sp.get("train", 0.75)),
            val_frac=float(sp.get("val", 0.05)),
            test_frac=float(sp.get("test", 0.20)),
            seed=int(sp.get("seed", seed)),
        )
        rp = d.get("representations", {}) or {}
        reps = RepsParams(
            clusters=int(rp.get("clusters", 20)),
            sample_frac=float(rp.get("sample_frac", 0.2)),
            seed=int(rp.get("seed", seed)),
        )

        def predictor(key: str, target: str) -> PredictorConfig:
            pd = dict(d.get(key, {}) or {})
            pd.setdefault("architecture", "attention")
            pd["target"] = target
            pd.setdefault("seed", seed)
            return PredictorConfig.from_dict(pd)

        lam = d.get("lambda_grid")
        if lam is None:
            lambdas = default_lambda_grid()
        elif isinstance(lam, dict):
            lambdas = default_lambda_grid(
                float(lam.get("low", 1e-4)), float(lam.get("high", 1e2)), int(lam.get("points", 16))
            )
        else:
            lambdas = [float(v) for v in lam]

        return ExperimentConfig(
            out=str(d.get("out", "runs/out")),
            seed=seed,
            data_path=data_path,
            synth=synth,
            synth_seed=synth_seed,
            pool=[str(m) for m in d["pool"]] if d.get("pool") else None,
            normalize=bool(d.get("normalize", True)),
            split_spec=split_spec,
            reps=reps,
            quality_predictor=predictor("quality_predictor", "quality"),
            cost_predictor=predictor("cost_predictor", "cost"),
            reward=str(d.get("reward", "r2")),
            lambdas=lambdas,
            strongest_model=d.get("strongest_model"),
            sensitivity_absolute=bool(d.get("sensitivity_absolute", False)),
            oracle=bool(d.get("oracle", False)),
            ablation=bool(d.get("ablation", False)),
        )

    @staticmethod
    def from_yaml(path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return ExperimentConfig.from_dict(yaml.safe_load(fh) or {})


# ---------------------------------------------------------------------------
# trace files


def write_trace(
    path: str | Path,
    ds_test: RoutingDataset,
    lambdas: list[float],
    family: str,
    strongest_model: str,
    decisions_per_lambda: list[list],
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "type": "header",
        "pool": list(ds_test.pool),
        "family": family,
        "lambda_grid": [float(l) for l in lambdas],
        "strongest_model": strongest_model,
        "n_queries": len(ds_test),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for lam, decisions in zip(lambdas, decisions_per_lambda):
            spec = RewardSpec(family=family, lam=lam)
            for rec, d in zip(ds_test.records, decisions):
                fh.write(
                    d.trace_line(spec, float(rec.quality[d.model]), float(rec.cost[d.model])) + "\n"
                )


def eval_trace(path: str | Path, absolute_sensitivity: bool = False):
    """Recompute sweep points and metrics from a trace file alone."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"empty trace file: {path}")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ValueError("trace file is missing its header line")
    pool = tuple(header["pool"])
    lambdas = [float(l) for l in header["lambda_grid"]]
    n = int(header["n_queries"])
    rows = [json.loads(line) for line in lines[1:]]
    if len(rows) != n * len(lambdas):
        raise ValueError(f"trace has {len(rows)} records, expected {n * len(lambdas)}")
    index = {m: i for i, m in enumerate(pool)}
    points = []
    for j, lam in enumerate(lambdas):
        chunk = rows[j * n : (j + 1) * n]
        if any(r["lambda"] != lam for r in chunk):
            raise ValueError(f"trace records out of order for lambda={lam}")
        perf = np.array([r["quality_true"] for r in chunk])
        cost = np.array([r["cost_true"] for r in chunk])
        counts = np.bincount([index[r["model"]] for r in chunk], minlength=len(pool))
        points.append(
            SweepPoint(
                lam=lam,
                avg_cost=float(cost.mean()),
                avg_perf=float(perf.mean()),
                calls=counts / n,
            )
        )
    metrics = metrics_report(points, header["strongest_model"], pool, absolute_sensitivity)
    return points, metrics, header


# ---------------------------------------------------------------------------
# pipeline


def _stage(name: str):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except Exception as exc:  # noqa: BLE001 - stage boundary
                raise StageError(name, exc) from exc

        return inner

    return wrap


def load_or_synth(config: ExperimentConfig) -> RoutingDataset:
    if config.data_path is not None:
        ds = load_dataset(config.data_path, pool=config.pool)
    else:
        ds = synth_generate(
            config.synth,
            config.synth_seed if config.synth_seed is not None else config.seed,
        )
        if config.pool is not None:
            ds = ds.subset_pool(config.pool)
    if config.normalize:
        ds = normalize_embeddings(ds)
    return ds


def pick_strongest(ds: RoutingDataset, config: ExperimentConfig) -> str:
    if config.strongest_model is not None:
        if config.strongest_model not in ds.pool:
            raise ValueError(f"strongest model {config.strongest_model!r} not in pool {ds.pool}")
        return config.strongest_model
    return ds.pool[int(np.argmax(ds.cost_matrix.mean(axis=0)))]


def run_experiment(config: ExperimentConfig) -> Metrics:
    """Run the full pipeline and write all artifacts under config.out."""
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    failed_marker = out / "FAILED"
    if failed_marker.exists():
        failed_marker.unlink()

    try:
        (out / "config.echo").write_text(
            yaml.safe_dump(config.to_dict(), sort_keys=True), encoding="utf-8"
        )

        ds = _stage("data")(load_or_synth)(config)
        strongest = _stage("data")(pick_strongest)(ds, config)
        ds_train, ds_val, ds_test = _stage("split")(split)(ds, config.split_spec)

        def build_reps():
            cm = kmeans(ds_train.embeddings, config.reps.clusters, config.reps.seed)
            reps = build_representations(ds_train, cm, config.reps.sample_frac, config.reps.seed)
            save_representations(reps, out / "reps.tsv")
            return reps

        reps = _stage("representations")(build_reps)()

        family = canonical_family(config.reward)

        def train_and_save(cfg: PredictorConfig, name: str):
            model = train(ds_train, ds_val, reps, cfg)
            save_predictor(model, out / f"predictor-{name}.bin")
            return model

        if config.oracle:
            router = oracle_router(ds_test)
        else:
            q_model = _stage("train-quality")(train_and_save)(config.quality_predictor, "quality")
            c_model = _stage("train-cost")(train_and_save)(config.cost_predictor, "cost")

            def predictions():
                pq = predict_matrix(q_model, ds_test, reps)
                pc = predict_matrix(c_model, ds_test, reps)
                return prediction_router(pq, pc, ds_test.pool)

            router = _stage("predict")(predictions)()

        def run_sweep():
            points, decisions = sweep(
                router, ds_test, config.lambdas, family, return_decisions=True
            )
            write_trace(out / "trace.jsonl", ds_test, config.lambdas, family, strongest, decisions)
            return points

        points = _stage("sweep")(run_sweep)()

        ablation_grid = None
        if config.ablation:
            ablation_grid = _stage("ablation")(run_ablation)(
                ds_train, ds_val, ds_test, reps, config, family
            )

        def report():
            from .report import write_report  # local import keeps matplotlib lazy

            metrics = metrics_report(points, strongest, ds_test.pool, config.sensitivity_absolute)
            write_report(
                out,
                points=points,
                metrics=metrics,
                pool=ds_test.pool,
                family=family,
                strongest_model=strongest,
                ablation_grid=ablation_grid,
            )
            return metrics

        return _stage("report")(report)()
    except StageError as exc:
        failed_marker.write_text(f"{exc.stage}: {exc.cause}\n", encoding="utf-8")
        raise


def run_ablation(ds_train, ds_val, ds_test, reps, config: ExperimentConfig, family: str) -> dict:
    """Cross quality x cost architectures; returns {(q_arch, c_arch): aiq}."""
    from .evaluation import aiq as aiq_fn

    preds = {}
    for arch in ABLATION_ARCHS:
        for target, base in (("quality", config.quality_predictor), ("cost", config.cost_predictor)):
            cfg = PredictorConfig(
                architecture=arch,
                target=target,
                internal_dim=base.internal_dim,
                learning_rate=base.learning_rate if arch == base.architecture else None,
                batch_size=base.batch_size,
                epochs=base.epochs,
                seed=base.seed,
            )
            model = train(ds_train, ds_val, reps, cfg)
            preds[(arch, target)] = predict_matrix(model, ds_test, reps)
    grid = {}
    for qa, ca in itertools.product(ABLATION_ARCHS, ABLATION_ARCHS):
        pts = sweep(
            prediction_router(preds[(qa, "quality")], preds[(ca, "cost")], ds_test.pool),
            ds_test,
            config.lambdas,
            family,
        )
        try:
            grid[(qa, ca)] = aiq_fn(pareto_hull([(p.avg_cost, p.avg_perf) for p in pts]))
        except Exception:
            grid[(qa, ca)] = math.nan
    return grid
