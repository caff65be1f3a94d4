"""Hungarian-matching accuracy, the four pipeline runners and benchmark aggregation.

Pipelines:

* ``os``   -- cluster the raw series (any algorithm).
* ``ls``   -- train the dense denoising autoencoder on flattened series and
  cluster its 5-dim latents.
* ``pr``   -- cluster the flattened pivot-distance projections.
* ``prls`` -- project, train the CNN-GRU autoencoder on the projections and
  cluster its 10-dim latents.

DTW-based k-means and k-shape are only legal in the original space: latents
and projections already live in a Euclidean space.

A benchmark is ``runs`` independent executions seeded ``base_seed + i``;
every run redraws pivots, re-initializes the autoencoder and re-seeds the
clustering, and the aggregate reports mean and sample standard deviation.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numpy as np

from .autoencoder import (
    CnnGruConfig,
    DenseDaeConfig,
    build_cnn_gru,
    build_dense_dae,
    encode,
    train,
)
from .clustering import Assignment, dbscan, kmeans, kmeans_dtw, kshape, spectral
from .dataset import Dataset
from .errors import ConfigError, ParameterError, ShapeError, TempoprojError
from .metrics import MetricKind, SBD
from .projection import cached_gen_proj_space, gen_proj_space, select_pivots

_PIPELINES = ("os", "ls", "pr", "prls")
_ALGORITHMS = ("kmeans", "kmeans_dtw", "kshape", "spectral", "dbscan")
_OS_ONLY = ("kmeans_dtw", "kshape")


def hungarian(cost) -> np.ndarray:
    """Minimum-cost row-to-column assignment for a square matrix.

    Returns ``cols`` with ``cols[r]`` the column matched to row r.  Standard
    potential-based shortest augmenting path construction, O(n^3).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ShapeError(f"cost matrix must be square, got {cost.shape}")
    if not np.isfinite(cost).all():
        raise ShapeError("cost matrix must be finite")
    n = cost.shape[0]
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)  # column -> row (0 = unmatched)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = inf
            j1 = -1
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    cols = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        cols[match[j] - 1] = j - 1
    return cols


def clustering_accuracy(pred, truth) -> float:
    """Best-bijection matched fraction between predictions and ground truth.

    Noise labels (-1) count as distinct singleton clusters.  The contingency
    table is zero-padded to square and matched with the Hungarian algorithm
    on negated counts.
    """
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ShapeError(f"label shapes differ: {pred.shape} vs {truth.shape}")
    n = pred.size
    if n == 0:
        raise ShapeError("empty label sequences")
    pred = pred.copy()
    noise = np.flatnonzero(pred == -1)
    if noise.size:
        next_id = pred.max() + 1 if pred.max() >= 0 else 0
        pred[noise] = next_id + np.arange(noise.size)
    _, pred_ids = np.unique(pred, return_inverse=True)
    _, truth_ids = np.unique(truth, return_inverse=True)
    side = max(pred_ids.max(), truth_ids.max()) + 1
    table = np.zeros((side, side))
    np.add.at(table, (pred_ids, truth_ids), 1.0)
    cols = hungarian(-table)
    matched = table[np.arange(side), cols].sum()
    return float(matched / n)


def improvement(target_acc: float, os_acc: float, ls_acc: float) -> float:
    """Gain of a projection pipeline over the best original/latent baseline."""
    return target_acc - max(os_acc, ls_acc)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one pipeline run needs; ``seed`` drives every random draw."""

    pipeline: str
    algorithm: str
    metric: MetricKind = SBD
    p: int = 16
    k: int | None = None
    seed: int = 0
    znormalize: bool | None = None       # None = per-pipeline default
    projection_znormalize: bool | None = None  # None = metric default
    dbscan_eps: object = "auto"
    dbscan_min_pts: int = 4
    dtw_band: int | None = None
    cnn_gru: CnnGruConfig | None = None
    dense_dae: DenseDaeConfig | None = None
    prls_raw_series: bool = False        # ablation: CNN-GRU on raw series
    cache_dir: str | None = None         # reuse projections across invocations

    def __post_init__(self):
        if self.pipeline not in _PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}")
        if self.algorithm not in _ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.algorithm in _OS_ONLY and self.pipeline != "os":
            raise ConfigError(
                f"{self.algorithm} only applies in the original space; latents and "
                "projections are Euclidean already"
            )
        if self.p < 1:
            raise ParameterError(f"pivot count must be >= 1, got {self.p}")

    def snapshot(self) -> dict:
        """JSON-able view of the configuration."""
        doc = {
            "pipeline": self.pipeline,
            "algorithm": self.algorithm,
            "metric": {"tag": self.metric.tag, "dtw_band": self.metric.dtw_band},
            "p": self.p,
            "k": self.k,
            "seed": self.seed,
            "znormalize": self.znormalize,
            "projection_znormalize": self.projection_znormalize,
            "dbscan_eps": self.dbscan_eps if isinstance(self.dbscan_eps, str)
            else float(self.dbscan_eps),
            "dbscan_min_pts": self.dbscan_min_pts,
            "dtw_band": self.dtw_band,
            "prls_raw_series": self.prls_raw_series,
        }
        if self.cnn_gru is not None:
            doc["cnn_gru"] = _config_dict(self.cnn_gru)
        if self.dense_dae is not None:
            doc["dense_dae"] = _config_dict(self.dense_dae)
        return doc


def _config_dict(cfg):
    from dataclasses import asdict

    out = asdict(cfg)
    for key in ("filters", "kernel", "pool", "hidden_dims"):
        if key in out:
            out[key] = list(out[key])
    return out


@dataclass
class RunReport:
    """One pipeline execution: assignment, accuracy and per-stage timing."""

    config: dict
    seed: int
    assignment: Assignment
    accuracy: float | None
    stage_times: dict
    loss_history: list | None = None

    def to_dict(self, include_times: bool = True) -> dict:
        doc = {
            "config": self.config,
            "seed": self.seed,
            "k": int(self.assignment.k),
            "labels": [int(x) for x in self.assignment.labels],
            "accuracy": None if self.accuracy is None else float(self.accuracy),
        }
        if include_times:
            doc["stage_times"] = {k: float(v) for k, v in self.stage_times.items()}
        return doc


@contextmanager
def _stage(name):
    """Re-raise package errors with the failing stage named."""
    try:
        yield
    except TempoprojError as exc:
        exc.args = (f"[stage: {name}] {exc}",) + exc.args[1:]
        raise


def _cluster_points(points, cfg: PipelineConfig, k: int) -> Assignment:
    if cfg.algorithm == "kmeans":
        return kmeans(points, k, seed=cfg.seed)
    if cfg.algorithm == "spectral":
        return spectral(points, k, seed=cfg.seed)
    if cfg.algorithm == "dbscan":
        return dbscan(points, eps=cfg.dbscan_eps, min_pts=cfg.dbscan_min_pts)
    raise ConfigError(f"{cfg.algorithm} cannot run on a plain point matrix")


def run_pipeline(ds: Dataset, cfg: PipelineConfig) -> RunReport:
    """Execute one pipeline on one dataset and score it when labels exist."""
    k = cfg.k if cfg.k is not None else ds.k_hint
    if k is None and cfg.algorithm != "dbscan":
        raise ConfigError("no cluster count: set k or provide a dataset k_hint")
    times = {}
    loss_history = None

    if cfg.pipeline == "os":
        t0 = time.perf_counter()
        with _stage("cluster"):
            if cfg.algorithm == "kmeans_dtw":
                work = ds.znormalized() if cfg.znormalize else ds
                assignment = kmeans_dtw(work, k, seed=cfg.seed, band=cfg.dtw_band)
            elif cfg.algorithm == "kshape":
                assignment = kshape(ds, k, seed=cfg.seed)
            else:
                work = ds.znormalized() if cfg.znormalize else ds
                assignment = _cluster_points(work.to_matrix(), cfg, k)
        times["cluster"] = time.perf_counter() - t0

    elif cfg.pipeline == "ls":
        znorm = True if cfg.znormalize is None else cfg.znormalize
        work = ds.znormalized() if znorm else ds
        dae_cfg = cfg.dense_dae or DenseDaeConfig(seed=cfg.seed)
        t0 = time.perf_counter()
        with _stage("train"):
            x = work.to_matrix()
            model = build_dense_dae(x.shape[1], dae_cfg)
            model, loss_history = train(model, x)
        times["train"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        with _stage("cluster"):
            latents = encode(model, x)
            assignment = _cluster_points(latents, cfg, k)
        times["cluster"] = time.perf_counter() - t0

    elif cfg.pipeline == "pr":
        t0 = time.perf_counter()
        with _stage("project"):
            pm = _project(ds, cfg)
        times["project"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        with _stage("cluster"):
            assignment = _cluster_points(pm.flattened(), cfg, k)
        times["cluster"] = time.perf_counter() - t0

    else:  # prls
        if cfg.prls_raw_series:
            # ablation: feed the autoencoder raw series instead of projections
            znorm = True if cfg.znormalize is None else cfg.znormalize
            work = ds.znormalized() if znorm else ds
            t0 = time.perf_counter()
            with _stage("project"):
                length = ds.equal_length
                if length is None:
                    raise ShapeError("raw-series ablation needs equal lengths")
                inputs = np.stack([ts.values.T for ts in work.samples])  # N,T,V
            times["project"] = time.perf_counter() - t0
            rows, cols = length, ds.v
        else:
            t0 = time.perf_counter()
            with _stage("project"):
                pm = _project(ds, cfg)
            times["project"] = time.perf_counter() - t0
            inputs = pm.values
            rows, cols = pm.p, pm.w
        ae_cfg = cfg.cnn_gru or CnnGruConfig(seed=cfg.seed)
        t0 = time.perf_counter()
        with _stage("train"):
            model = build_cnn_gru((rows, cols, 1), ae_cfg)
            model, loss_history = train(model, inputs)
        times["train"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        with _stage("cluster"):
            latents = encode(model, inputs)
            assignment = _cluster_points(latents, cfg, k)
        times["cluster"] = time.perf_counter() - t0

    accuracy = None
    if ds.has_labels:
        accuracy = clustering_accuracy(assignment.labels, ds.labels)
    return RunReport(
        config=cfg.snapshot(),
        seed=cfg.seed,
        assignment=assignment,
        accuracy=accuracy,
        stage_times=times,
        loss_history=loss_history,
    )


def _project(ds, cfg: PipelineConfig):
    metric = cfg.metric
    if cfg.dtw_band is not None and metric.tag == "dtw":
        metric = MetricKind("dtw", dtw_band=cfg.dtw_band)
    if cfg.cache_dir is not None:
        pm, _ = cached_gen_proj_space(
            ds, cfg.p, cfg.seed, metric, cfg.cache_dir, cfg.projection_znormalize
        )
        return pm
    pivots = select_pivots(ds, cfg.p, cfg.seed)
    return gen_proj_space(ds, pivots, metric, cfg.projection_znormalize)


@dataclass
class BenchmarkResult:
    """Aggregate over independent seeded runs of one pipeline cell."""

    config: dict
    base_seed: int
    runs: int
    mean: float | None
    std: float | None
    reports: list = field(default_factory=list)

    def to_dict(self, include_times: bool = True) -> dict:
        return {
            "config": self.config,
            "base_seed": self.base_seed,
            "runs": self.runs,
            "mean_accuracy": self.mean,
            "std_accuracy": self.std,
            "reports": [r.to_dict(include_times) for r in self.reports],
        }


def _run_seeded(args):
    ds, cfg, seed = args
    run_cfg = replace(cfg, seed=seed)
    if cfg.cnn_gru is not None:
        run_cfg = replace(run_cfg, cnn_gru=replace(cfg.cnn_gru, seed=seed))
    if cfg.dense_dae is not None:
        run_cfg = replace(run_cfg, dense_dae=replace(cfg.dense_dae, seed=seed))
    return run_pipeline(ds, run_cfg)


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, capped by TEMPOPROJ_THREADS (default 1)."""
    cap = os.environ.get("TEMPOPROJ_THREADS", "").strip()
    cap = int(cap) if cap else 1
    if workers is None:
        workers = cap
    return max(1, min(workers, cap))


def benchmark(ds: Dataset, cfg: PipelineConfig, runs: int = 10,
              workers: int | None = None) -> BenchmarkResult:
    """Run ``runs`` independent seeded executions and aggregate accuracy.

    Run i uses seed ``cfg.seed + i`` for pivots, model init and clustering
    alike.  ``std`` is the sample standard deviation (0 when runs == 1).
    """
    if runs < 1:
        raise ParameterError(f"runs must be >= 1, got {runs}")
    jobs = [(ds, cfg, cfg.seed + i) for i in range(runs)]
    n_workers = resolve_workers(workers)
    if n_workers > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=min(n_workers, runs)) as pool:
            reports = list(pool.map(_run_seeded, jobs))
    else:
        reports = [_run_seeded(job) for job in jobs]
    accs = [r.accuracy for r in reports if r.accuracy is not None]
    mean = float(np.mean(accs)) if accs else None
    if accs:
        std = float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0
    else:
        std = None
    return BenchmarkResult(
        config=cfg.snapshot(), base_seed=cfg.seed, runs=runs,
        mean=mean, std=std, reports=reports,
    )


def improvement_rows(cells: dict) -> list:
    """Table improvement rows: projection pipelines vs the best baseline.

    ``cells`` maps (pipeline, algorithm) to BenchmarkResult.  The k-means
    baseline is the best of OS k-means, OS k-means+DTW and LS k-means; the
    spectral baseline is the best of OS and LS spectral.
    """
    rows = []
    families = {
        "kmeans": (("os", "kmeans"), ("os", "kmeans_dtw"), ("ls", "kmeans")),
        "spectral": (("os", "spectral"), ("ls", "spectral")),
    }
    for target in ("pr", "prls"):
        for family, baselines in families.items():
            cell = cells.get((target, family))
            if cell is None or cell.mean is None:
                continue
            base = [cells[b].mean for b in baselines
                    if b in cells and cells[b].mean is not None]
            if not base:
                continue
            rows.append({
                "pipeline": target,
                "algorithm": family,
                "improvement": cell.mean - max(base),
            })
    return rows


def write_benchmark_json(cells: dict, path, include_times: bool = False) -> None:
    """Serialize benchmark cells as JSON (deterministic unless times included)."""
    doc = {
        f"{pipeline}/{algorithm}": result.to_dict(include_times)
        for (pipeline, algorithm), result in sorted(cells.items())
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_timing_json(cells: dict, path) -> None:
    """Timing sidecar: wall-clock stage times plus a capture timestamp."""
    doc = {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "cells": {
            f"{pipeline}/{algorithm}": [
                {"seed": r.seed,
                 "stage_times": {k: float(v) for k, v in r.stage_times.items()}}
                for r in result.reports
            ]
            for (pipeline, algorithm), result in sorted(cells.items())
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_table_csv(cells: dict, path) -> None:
    """Table-1-shaped CSV: one row per cell plus improvement rows."""
    lines = ["pipeline,algorithm,mean_accuracy,std_accuracy"]
    for (pipeline, algorithm) in sorted(cells):
        result = cells[(pipeline, algorithm)]
        mean = "" if result.mean is None else f"{result.mean:.4f}"
        std = "" if result.std is None else f"{result.std:.4f}"
        lines.append(f"{pipeline},{algorithm},{mean},{std}")
    for row in improvement_rows(cells):
        lines.append(
            f"improvement[{row['pipeline']}],{row['algorithm']},"
            f"{row['improvement']:.4f},"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
