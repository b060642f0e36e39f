"""Aggregation of run artifacts: per-run summaries, comparison tables and improvement heatmaps."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import AggregationError, ValidationError
from .trainer.history import RunHistory

SUMMARY_COLUMNS = ("name", "architecture", "target", "params", "seeds", "completed", "diverged",
                   "rel_l2_mean", "rel_l2_se", "loss_mean", "loss_se", "ms_per_iteration")
COMPARE_COLUMNS = ("run", "architecture", "params", "rel_l2_mean", "rel_l2_se", "ms_per_iteration")
HEATMAP_COLUMNS = ("width", "depth", "default", "proposed", "improvement", "worse")


def mean_se(values) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(n)); the error is NaN for fewer than two values."""
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


def history_path(run_dir, seed: int) -> Path:
    return Path(run_dir) / f"history_seed{seed}.csv"


def meta_path(run_dir, seed: int) -> Path:
    return Path(run_dir) / f"meta_seed{seed}.json"


def summarize_run(run_dir, name: str, architecture: str, target: str, params: int, seeds) -> dict:
    """Summary row recomputed from the per-seed history and metadata files in ``run_dir``."""
    rel, loss, ms = [], [], []
    completed = diverged = 0
    for s in seeds:
        meta = json.loads(meta_path(run_dir, s).read_text())
        if meta.get("diverged"):
            diverged += 1
            continue
        completed += 1
        h = RunHistory.from_csv(history_path(run_dir, s))
        rel.append(h.last("rel_l2"))
        loss.append(h.last("total"))
        ms.append(meta.get("ms_per_iteration", math.nan))
    rel_m, rel_se = mean_se(rel)
    loss_m, loss_se = mean_se(loss)
    ms_m, _ = mean_se(ms)
    return {"name": name, "architecture": architecture, "target": target, "params": int(params),
            "seeds": len(list(seeds)), "completed": completed, "diverged": diverged,
            "rel_l2_mean": rel_m, "rel_l2_se": rel_se, "loss_mean": loss_m, "loss_se": loss_se,
            "ms_per_iteration": ms_m}


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([r[c] if not isinstance(r[c], float) else repr(r[c]) for c in columns])


def read_rows(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def compare_runs(run_dirs) -> list:
    """One row per run directory, taken from its ``summary.csv``."""
    missing = [str(d) for d in run_dirs if not (Path(d) / "summary.csv").is_file()]
    if missing:
        raise AggregationError(f"missing run artifacts: {', '.join(missing)}", missing)
    rows = []
    for d in run_dirs:
        s = read_rows(Path(d) / "summary.csv")[0]
        rows.append({"run": s["name"], "architecture": s["architecture"], "params": int(s["params"]),
                     "rel_l2_mean": float(s["rel_l2_mean"]), "rel_l2_se": float(s["rel_l2_se"]),
                     "ms_per_iteration": float(s["ms_per_iteration"])})
    return rows


def improvement_cell(eps_default: float, eps_proposed: float) -> tuple[float, bool]:
    """Percentage improvement clipped to [0, 100]; the flag marks cells where the proposal is worse."""
    if eps_default <= 0:
        raise ValidationError("default error must be positive")
    pct = (eps_default - eps_proposed) / eps_default * 100.0
    return float(np.clip(pct, 0.0, 100.0)), bool(pct < 0)


def improvement_heatmap(default_grid: dict, proposed_grid: dict) -> list:
    """Cells for matched ``{(width, depth): error}`` grids."""
    if set(default_grid) != set(proposed_grid):
        raise ValidationError(f"grids differ in cells {sorted(set(default_grid) ^ set(proposed_grid))}")
    rows = []
    for (width, depth) in sorted(default_grid):
        d, p = default_grid[(width, depth)], proposed_grid[(width, depth)]
        pct, worse = improvement_cell(d, p)
        rows.append({"width": width, "depth": depth, "default": d, "proposed": p,
                     "improvement": pct, "worse": worse})
    return rows


def read_grid(path) -> dict:
    """``{(width, depth): rel_l2_mean}`` from a sweep CSV."""
    return {(int(r["width"]), int(r["depth"])): float(r["rel_l2_mean"]) for r in read_rows(path)}
