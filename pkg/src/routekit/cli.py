"""Command-line driver.

Subcommands mirror the pipeline stages: synth, build-reps, train, sweep,
eval, route, report. A YAML config file provides the experiment description;
flags override individual fields. Exit code 0 on success, 1 on failure with
a stage-tagged message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dataset import SynthSpec, load_dataset, normalize_embeddings, save_dataset, split, synth_generate
from .evaluation import default_lambda_grid, oracle_router, prediction_router, sweep
from .experiment import ExperimentConfig, StageError, eval_trace, run_experiment, write_trace
from .predictors import PredictorConfig, load_predictor, predict_matrix, save_predictor, train
from .representations import build_representations, kmeans, load_representations, reps_matrix, save_representations
from .routing import RewardSpec, route


def parse_lambda_grid(text: str) -> list[float]:
    """Either 'low:high:points' or a comma-separated list."""
    if ":" in text:
        low, high, points = text.split(":")
        return default_lambda_grid(float(low), float(high), int(points))
    return [float(v) for v in text.split(",")]


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        config = ExperimentConfig.from_yaml(args.config)
    else:
        config = ExperimentConfig(out="runs/out", synth=SynthSpec(n=200, models=3))
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
        config.split_spec = replace(config.split_spec, seed=args.seed)
        config.reps = replace(config.reps, seed=args.seed)
        config.quality_predictor = replace(config.quality_predictor, seed=args.seed)
        config.cost_predictor = replace(config.cost_predictor, seed=args.seed)
    if getattr(args, "out", None):
        config.out = args.out
    if getattr(args, "pool", None):
        config.pool = [m.strip() for m in args.pool.split(",")]
    if getattr(args, "reward", None):
        config.reward = args.reward
    if getattr(args, "lambda_grid", None):
        config.lambdas = parse_lambda_grid(args.lambda_grid)
    if getattr(args, "arch_quality", None):
        config.quality_predictor = replace(config.quality_predictor, architecture=args.arch_quality)
    if getattr(args, "arch_cost", None):
        config.cost_predictor = replace(config.cost_predictor, architecture=args.arch_cost)
    if getattr(args, "data", None):
        config.data_path = args.data
        config.synth = None
    if getattr(args, "epochs", None) is not None:
        config.quality_predictor = replace(config.quality_predictor, epochs=args.epochs)
        config.cost_predictor = replace(config.cost_predictor, epochs=args.epochs)
    if getattr(args, "oracle", False):
        config.oracle = True
    if getattr(args, "ablation", False):
        config.ablation = True
    if getattr(args, "strongest_model", None):
        config.strongest_model = args.strongest_model
    return config


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n=args.n,
        models=args.models,
        dim=args.dim,
        clusters=args.clusters,
        noise=args.noise,
    )
    ds = synth_generate(spec, args.seed if args.seed is not None else 0)
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} records for {ds.n_models} models to {args.out}")
    return 0


def _split_from(args, config: ExperimentConfig):
    ds = load_dataset(args.data, pool=config.pool)
    if config.normalize:
        ds = normalize_embeddings(ds)
    return ds, split(ds, config.split_spec)


def cmd_build_reps(args) -> int:
    config = _load_config(args)
    ds, (ds_train, _, _) = _split_from(args, config)
    cm = kmeans(ds_train.embeddings, args.clusters or config.reps.clusters, config.reps.seed)
    reps = build_representations(
        ds_train, cm, args.sample_frac or config.reps.sample_frac, config.reps.seed
    )
    save_representations(reps, args.out or "reps.tsv")
    print(f"wrote {len(reps)} model profiles ({cm.n_clusters} clusters) to {args.out or 'reps.tsv'}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    ds, (ds_train, ds_val, _) = _split_from(args, config)
    cfg = config.quality_predictor if args.target == "quality" else config.cost_predictor
    reps = load_representations(args.reps) if args.reps else None
    model = train(ds_train, ds_val, reps, cfg)
    out = args.out or f"predictor-{args.target}.bin"
    save_predictor(model, out)
    print(f"trained {cfg.architecture} {args.target} predictor -> {out}")
    return 0


def cmd_sweep(args) -> int:
    config = _load_config(args)
    ds, (ds_train, ds_val, ds_test) = _split_from(args, config)
    reps = load_representations(args.reps) if args.reps else None
    family = config.reward
    if args.oracle:
        router = oracle_router(ds_test)
    else:
        q = load_predictor(args.predictor_quality)
        c = load_predictor(args.predictor_cost)
        router = prediction_router(
            predict_matrix(q, ds_test, reps), predict_matrix(c, ds_test, reps), ds_test.pool
        )
    points, decisions = sweep(router, ds_test, config.lambdas, family, return_decisions=True)
    out = Path(args.out or "sweep-out")
    out.mkdir(parents=True, exist_ok=True)
    strongest = config.strongest_model or ds_test.pool[
        int(np.argmax(ds_test.cost_matrix.mean(axis=0)))
    ]
    write_trace(out / "trace.jsonl", ds_test, config.lambdas, family, strongest, decisions)
    from .report import sweep_table

    (out / "sweep.tsv").write_text(sweep_table(points, ds_test.pool), encoding="utf-8")
    print(f"swept {len(config.lambdas)} lambdas over {len(ds_test)} queries -> {out}")
    return 0


def cmd_eval(args) -> int:
    points, metrics, header = eval_trace(args.trace, absolute_sensitivity=args.absolute)
    print(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_route(args) -> int:
    config = _load_config(args)
    if args.embedding == "-":
        embedding = np.asarray(json.loads(sys.stdin.read()), dtype=np.float64)
    else:
        embedding = np.asarray(json.loads(Path(args.embedding).read_text()), dtype=np.float64)
    norm = np.linalg.norm(embedding)
    if norm > 0:
        embedding = embedding / norm
    reps = load_representations(args.reps) if args.reps else None
    reps_values = reps_matrix(reps) if reps else None
    q = load_predictor(args.predictor_quality)
    c = load_predictor(args.predictor_cost)
    pool = tuple(r.model for r in reps) if reps else getattr(q, "pool", None)
    qs = q.predict(embedding[None, :], reps_values)[0]
    cs = c.predict(embedding[None, :], reps_values)[0]
    spec = RewardSpec(family=config.reward, lam=args.lam)
    decision = route(qs, cs, spec, pool=pool, query_id="cli")
    print(
        json.dumps(
            {
                "model": decision.model,
                "index": decision.index,
                "lambda": spec.lam,
                "family": spec.family,
                "quality_pred": decision.quality,
                "cost_pred": decision.cost,
                "rewards": [float(r) for r in decision.rewards],
            },
            indent=2,
        )
    )
    return 0


def cmd_report(args) -> int:
    config = _load_config(args)
    metrics = run_experiment(config)
    print(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    print(f"report written to {config.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="routekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--pool", help="comma-separated model subset")
        p.add_argument("--reward", choices=["r1", "r2", "linear", "exponential"])
        p.add_argument("--lambda-grid", dest="lambda_grid", help="'low:high:points' or comma list")
        if data:
            p.add_argument("--data", help="canonical dataset file")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--models", type=int, required=True)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--clusters", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-reps", help="cluster training queries and profile models")
    common(p, data=True)
    p.add_argument("--clusters", type=int)
    p.add_argument("--sample-frac", dest="sample_frac", type=float)
    p.set_defaults(func=cmd_build_reps)

    p = sub.add_parser("train", help="train one predictor")
    common(p, data=True)
    p.add_argument("--target", choices=["quality", "cost"], required=True)
    p.add_argument("--arch-quality", dest="arch_quality")
    p.add_argument("--arch-cost", dest="arch_cost")
    p.add_argument("--reps", help="model profiles TSV")
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="route the test split across the lambda grid")
    common(p, data=True)
    p.add_argument("--reps")
    p.add_argument("--predictor-quality", dest="predictor_quality")
    p.add_argument("--predictor-cost", dest="predictor_cost")
    p.add_argument("--oracle", action="store_true", help="route on ground truth")
    p.add_argument("--strongest-model", dest="strongest_model")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="recompute metrics from a saved trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--absolute", action="store_true", help="absolute-value sensitivity")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("route", help="route a single embedding")
    common(p)
    p.add_argument("--embedding", required=True, help="JSON array file, or - for stdin")
    p.add_argument("--reps")
    p.add_argument("--predictor-quality", dest="predictor_quality", required=True)
    p.add_argument("--predictor-cost", dest="predictor_cost", required=True)
    p.add_argument("--lam", type=float, required=True)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("report", help="run the full experiment and write reports")
    common(p, data=True)
    p.add_argument("--arch-quality", dest="arch_quality")
    p.add_argument("--arch-cost", dest="arch_cost")
    p.add_argument("--epochs", type=int)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--ablation", action="store_true")
    p.add_argument("--strongest-model", dest="strongest_model")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - single CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
