"""Command-line harness: ``run``, ``compare``, ``heatmap`` and ``sweep``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context
from pathlib import Path

import jax
import numpy as np

from . import diag
from .config import SWEEPS, RunConfig
from .errors import ConfigurationError, DivergenceError, RgaKanError
from .models import count_params, save_params
from .problems import load_reference, reference_from_function, spectral_reference
from .report import (COMPARE_COLUMNS, HEATMAP_COLUMNS, SUMMARY_COLUMNS, compare_runs, history_path,
                     improvement_heatmap, meta_path, read_grid, summarize_run, write_rows)
from .trainer import FitConfig, fit_function, train

log = logging.getLogger("rgakan")

EXIT_OK, EXIT_DIVERGED, EXIT_ERROR = 0, 2, 1
MAX_REFERENCE_COLUMNS = 257


def build_reference(cfg: RunConfig):
    """Evaluation field for a PDE config, or ``None`` when disabled."""
    problem = cfg.problem_definition()
    ref = cfg.reference
    source = ref["source"]
    if source == "none":
        return None
    if source == "auto":
        source = "analytic" if problem.has_analytic else "spectral"
    if source == "file":
        return load_reference(ref["path"], problem.domain)
    if source == "analytic":
        axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(problem.domain, ref["resolution"])]
        return reference_from_function(problem.coords, axes, lambda p: np.asarray(problem.analytic(p)))
    field = spectral_reference(problem)
    stride = max(1, (len(field.axes[1]) - 1) // (MAX_REFERENCE_COLUMNS - 1))
    return type(field)(coords=field.coords, axes=(field.axes[0], field.axes[1][::stride]),
                       values=field.values[:, ::stride], provenance=field.provenance)


def _run_seed(cfg: RunConfig, seed: int, out: Path, depth=None, width=None) -> dict:
    model = cfg.build_model(depth, width)
    meta = {"seed": seed, "diverged": False}
    start = time.perf_counter()
    if cfg.function is not None:
        fit = fit_function(model, cfg.function, FitConfig(iterations=cfg.iterations, log_every=cfg.log_every), seed)
        fit.history.rows[-1]["rel_l2"] = fit.rel_l2
        history, params = fit.history, fit.params
        meta["ms_per_iteration"] = 1e3 * (time.perf_counter() - start) / max(cfg.iterations, 1)
    else:
        problem = cfg.problem_definition()
        try:
            result = train(model, problem, cfg.train_config(), seed=seed, reference=build_reference(cfg))
        except DivergenceError as exc:
            log.warning("seed %d diverged at iteration %s", seed, exc.iteration)
            exc.history.to_csv(history_path(out, seed))
            meta.update(diverged=True, iteration=exc.iteration)
            meta_path(out, seed).write_text(json.dumps(meta))
            return meta
        history, params = result.history, result.params
        meta["ms_per_iteration"] = 1e3 * result.seconds_per_iteration
    meta["seconds"] = time.perf_counter() - start
    history.to_csv(history_path(out, seed))
    snr = history.column("snr")
    if any(np.isfinite(snr)):
        phases = diag.ib_phases(history.column("iteration"), snr)
        (out / f"phases_seed{seed}.json").write_text(json.dumps(phases))
    if cfg.checkpoint:
        save_params(out / f"params_seed{seed}.bin", params, {"seed": seed, "name": cfg.name})
    meta_path(out, seed).write_text(json.dumps(meta))
    return meta


def _seed_job(args):
    text, source, seed, out, depth, width = args
    return _run_seed(RunConfig.from_yaml(text, source), seed, Path(out), depth, width)


def run_experiment(cfg: RunConfig, out: Path | None = None, parallel: bool = False,
                   depth: int | None = None, width: int | None = None) -> tuple[dict, int]:
    """Train every seed, write per-seed artifacts and ``summary.csv``; returns the summary and exit code."""
    out = Path(out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(cfg.to_yaml())
    seeds = list(cfg.seeds)
    if parallel and len(seeds) > 1:
        jobs = [(cfg.to_yaml(), cfg.source, s, str(out), depth, width) for s in seeds]
        with ProcessPoolExecutor(max_workers=len(seeds), mp_context=get_context("spawn")) as pool:
            metas = list(pool.map(_seed_job, jobs))
    else:
        metas = [_run_seed(cfg, s, out, depth, width) for s in seeds]
    model = cfg.build_model(depth, width)
    n_params = count_params(model.init(jax.random.PRNGKey(0)))
    target = cfg.problem or cfg.function
    summary = summarize_run(out, cfg.name, cfg.architecture, target, n_params, seeds)
    write_rows(out / "summary.csv", SUMMARY_COLUMNS, [summary])
    code = EXIT_DIVERGED if any(m["diverged"] for m in metas) else EXIT_OK
    return summary, code


def run_sweep(cfg: RunConfig, preset: str, out: Path | None = None) -> int:
    if preset not in SWEEPS:
        raise ConfigurationError(f"unknown sweep {preset!r}; choose from {sorted(SWEEPS)}")
    grid = SWEEPS[preset]
    out = Path(out or cfg.output)
    rows, code = [], EXIT_OK
    for width in grid["width"]:
        for depth in grid["depth"]:
            summary, c = run_experiment(cfg, out / f"w{width}_d{depth}", depth=depth, width=width)
            code = max(code, c)
            rows.append({"width": width, "depth": depth, "params": summary["params"],
                         "rel_l2_mean": summary["rel_l2_mean"], "rel_l2_se": summary["rel_l2_se"]})
    write_rows(out / "sweep.csv", ("width", "depth", "params", "rel_l2_mean", "rel_l2_se"), rows)
    return code


def _parse(argv):
    ap = argparse.ArgumentParser(prog="rgakan-bench", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in ("run", "sweep"):
        p = sub.add_parser(verb)
        p.add_argument("config")
        p.add_argument("--seeds", help="comma-separated seed list overriding the config")
        p.add_argument("--iterations", type=int)
        p.add_argument("--output")
        p.add_argument("--preset", help="adaptive-training preset applied on top of the config")
        if verb == "run":
            p.add_argument("--parallel", action="store_true", help="train seeds in separate processes")
        else:
            p.add_argument("--grid", default="depth", help=f"sweep grid: {', '.join(sorted(SWEEPS))}")
    p = sub.add_parser("compare")
    p.add_argument("runs", nargs="+")
    p.add_argument("--output", default="comparison.csv")
    p = sub.add_parser("heatmap")
    p.add_argument("default")
    p.add_argument("proposed")
    p.add_argument("--output", default="heatmap.csv")
    return ap.parse_args(argv)


def _load(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    changes = {}
    if args.seeds:
        try:
            changes["seeds"] = [int(s) for s in args.seeds.split(",")]
        except ValueError:
            raise ConfigurationError(f"--seeds: expected comma-separated integers, got {args.seeds!r}") from None
    if args.iterations is not None:
        changes["iterations"] = args.iterations
    if args.preset:
        changes["preset"] = args.preset
    return cfg.with_overrides(**changes) if changes else cfg


def main(argv=None) -> int:
    args = _parse(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.verb == "run":
            summary, code = run_experiment(_load(args), args.output and Path(args.output), args.parallel)
            print(f"{summary['name']}: rel_l2 {summary['rel_l2_mean']:.3e} +- {summary['rel_l2_se']:.2e} "
                  f"({summary['completed']}/{summary['seeds']} seeds completed)")
            return code
        if args.verb == "sweep":
            return run_sweep(_load(args), args.grid, args.output and Path(args.output))
        if args.verb == "compare":
            rows = compare_runs([Path(r) for r in args.runs])
            write_rows(args.output, COMPARE_COLUMNS, rows)
            return EXIT_OK
        rows = improvement_heatmap(read_grid(args.default), read_grid(args.proposed))
        write_rows(args.output, HEATMAP_COLUMNS, rows)
        return EXIT_OK
    except RgaKanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
