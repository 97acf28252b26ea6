"""Report rendering: text table, machine-readable JSON, delimited sweep
points for external plotting, and matplotlib figures on the cost-performance
plane."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import Metrics, SweepPoint, pareto_hull  # noqa: E402

ABLATION_ORDER = ("regression", "fcn2", "fcn3", "attention")


def sweep_table(points: Sequence[SweepPoint], pool: tuple[str, ...]) -> str:
    header = ["lambda", "avg_cost", "avg_perf"] + [f"calls[{m}]" for m in pool]
    lines = ["\t".join(header)]
    for p in points:
        cells = [repr(p.lam), repr(p.avg_cost), repr(p.avg_perf)] + [repr(float(c)) for c in p.calls]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _text_report(
    points, metrics: Metrics, pool, family, strongest_model, ablation_grid=None
) -> str:
    lines = []
    lines.append("router evaluation report")
    lines.append(f"reward family : {family}")
    lines.append(f"pool          : {', '.join(pool)}")
    lines.append(f"strongest     : {strongest_model}")
    lines.append("")
    lines.append(f"{'metric':<12} {'value':>14}")
    lines.append(f"{'aiq':<12} {metrics.aiq:>14.5f}")
    lines.append(f"{'perf_max':<12} {metrics.perf_max:>14.5f}")
    lines.append(f"{'sens_perf':<12} {metrics.sens_perf:>14.6g}")
    lines.append(f"{'sens_cost':<12} {metrics.sens_cost:>14.6g}")
    lines.append(f"{'max_calls':<12} {metrics.max_calls:>13.3%}")
    lines.append("")
    lines.append(f"{'lambda':>12} {'avg_cost':>12} {'avg_perf':>10}  calls")
    for p in points:
        calls = " ".join(f"{float(c):.3f}" for c in p.calls)
        lines.append(f"{p.lam:>12.5g} {p.avg_cost:>12.6g} {p.avg_perf:>10.5f}  {calls}")
    if ablation_grid is not None:
        lines.append("")
        lines.append("ablation grid (aiq, rows = quality predictor, cols = cost predictor)")
        lines.append(f"{'':<12}" + "".join(f"{a:>12}" for a in ABLATION_ORDER))
        for qa in ABLATION_ORDER:
            row = "".join(f"{ablation_grid[(qa, ca)]:>12.5f}" for ca in ABLATION_ORDER)
            lines.append(f"{qa:<12}" + row)
    return "\n".join(lines) + "\n"


def _pareto_figure(points, path: Path) -> None:
    costs = [p.avg_cost for p in points]
    perfs = [p.avg_perf for p in points]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(costs, perfs, s=30, color="tab:blue", zorder=3, label="sweep points")
    try:
        curve = pareto_hull(list(zip(costs, perfs)))
        hx = [c for c, _ in curve.hull]
        hy = [p for _, p in curve.hull]
        ax.plot(hx, hy, "k--", linewidth=1.5, label="upper hull")
    except Exception:
        pass  # degenerate sweeps still get the scatter
    ax.set_xlabel("average cost per query (USD)")
    ax.set_ylabel("average performance")
    ax.legend(loc="lower right", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _calls_figure(points, pool, path: Path) -> None:
    lams = [p.lam for p in points]
    fracs = np.array([p.calls for p in points]).T  # (K, n_points)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.stackplot(lams, fracs, labels=list(pool), alpha=0.85)
    ax.set_xscale("log")
    ax.set_xlabel("willingness to pay (lambda)")
    ax.set_ylabel("fraction of queries routed")
    ax.set_ylim(0, 1)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _ablation_figure(grid: dict, path: Path) -> None:
    data = np.array([[grid[(qa, ca)] for ca in ABLATION_ORDER] for qa in ABLATION_ORDER])
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(data, cmap="viridis")
    ax.set_xticks(range(len(ABLATION_ORDER)), ABLATION_ORDER, rotation=30, ha="right")
    ax.set_yticks(range(len(ABLATION_ORDER)), ABLATION_ORDER)
    ax.set_xlabel("cost predictor")
    ax.set_ylabel("quality predictor")
    for i in range(data.shape[0]):
        for j in range(data.shape[1]):
            ax.text(j, i, f"{data[i, j]:.3f}", ha="center", va="center", color="w", fontsize=8)
    fig.colorbar(im, ax=ax, label="aiq")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(
    out_dir: str | Path,
    points: Sequence[SweepPoint],
    metrics: Metrics,
    pool: tuple[str, ...],
    family: str,
    strongest_model: str,
    ablation_grid: dict | None = None,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    (out / "report.txt").write_text(
        _text_report(points, metrics, pool, family, strongest_model, ablation_grid),
        encoding="utf-8",
    )
    (out / "sweep.tsv").write_text(sweep_table(points, pool), encoding="utf-8")

    payload = {
        "reward": family,
        "pool": list(pool),
        "strongest_model": strongest_model,
        "metrics": metrics.to_dict(),
        "sweep": [
            {
                "lambda": p.lam,
                "avg_cost": p.avg_cost,
                "avg_perf": p.avg_perf,
                "calls": {m: float(c) for m, c in zip(pool, p.calls)},
            }
            for p in points
        ],
    }
    try:
        curve = pareto_hull([(p.avg_cost, p.avg_perf) for p in points])
        payload["hull"] = [[c, q] for c, q in curve.hull]
        payload["cost_range"] = list(curve.cost_range)
    except Exception:
        payload["hull"] = None
    if ablation_grid is not None:
        payload["ablation"] = {
            f"{qa}|{ca}": (None if v != v else v) for (qa, ca), v in ablation_grid.items()
        }
    (out / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    _pareto_figure(points, out / "pareto.png")
    _calls_figure(points, pool, out / "calls.png")
    if ablation_grid is not None:
        _ablation_figure(ablation_grid, out / "ablation.png")
