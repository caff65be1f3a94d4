"""Command-line surface: dataset inspection, projection, benchmarks and plots.

Subcommands::

    tempoproj info      --data plane.tsv [--format ucr]
    tempoproj project   --data plane.tsv --metric sbd --pivots 16 --seed 7 --out runs/
    tempoproj benchmark --data spec.json --format synth --pipeline os,pr,prls \
                        --algorithm kmeans,spectral --runs 10 --out runs/
    tempoproj benchmark --data spec.json --sweep-pivots 4,8,16,32 --out runs/
    tempoproj plot      --latent z.csv --labels labels.csv --out scatter.svg

Exit codes: 0 success, 2 usage/config errors, 1 runtime errors.  Reports for
one flag set land in a directory named by a hash of the configuration, with
wall-clock times isolated in a ``timing.json`` sidecar so repeated runs are
byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .autoencoder import load_model, encode, write_loss_history
from .clustering import jacobi_eigen
from .dataset import Dataset, GeneratorSpec, load_multivariate, load_ucr, synth_generate
from .errors import ConfigError, ParameterError, TempoprojError
from .evaluation import (
    PipelineConfig,
    benchmark,
    write_benchmark_json,
    write_table_csv,
    write_timing_json,
)
from .metrics import MetricKind
from .projection import cached_gen_proj_space

_METRICS = ("euclidean", "dtw", "sbd")
_PIPELINES = ("os", "ls", "pr", "prls")
_CLI_ALGORITHMS = ("kmeans", "kmeans-dtw", "kshape", "spectral", "dbscan")

# matplotlib tab10, hardcoded to keep the SVG writer dependency-free
_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _load_dataset(path: str, fmt: str, seed: int) -> Dataset:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"no such dataset path: {path}")
    if fmt == "auto":
        if p.is_dir():
            fmt = "multivariate"
        elif p.suffix == ".json":
            fmt = "synth"
        else:
            fmt = "ucr"
    if fmt == "ucr":
        return load_ucr(p)
    if fmt == "multivariate":
        return load_multivariate(p)
    if fmt == "synth":
        return synth_generate(GeneratorSpec.from_json(p.read_text()), seed=seed)
    raise ConfigError(f"unknown format {fmt!r}")


def _metric_from_args(args) -> MetricKind:
    band = getattr(args, "dtw_band", None)
    if args.metric == "dtw":
        return MetricKind("dtw", dtw_band=band)
    return MetricKind(args.metric)


def _config_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def cmd_info(args) -> int:
    ds = _load_dataset(args.data, args.format, args.seed)
    lengths = ds.lengths
    print(f"dataset      {ds.name}")
    print(f"samples      {ds.n}")
    print(f"variables    {ds.v}")
    if ds.equal_length is not None:
        print(f"length       {ds.equal_length}")
    else:
        print(f"length       {min(lengths)}..{max(lengths)} (variable)")
    print(f"labels       {'yes' if ds.has_labels else 'no'}")
    if ds.k_hint is not None:
        print(f"k_hint       {ds.k_hint}")
    return 0


def cmd_project(args) -> int:
    ds = _load_dataset(args.data, args.format, args.seed)
    metric = _metric_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    pm, hit = cached_gen_proj_space(ds, args.pivots, args.seed, metric, out_dir)
    elapsed = time.perf_counter() - t0
    state = "cached" if hit else "computed"
    print(
        f"projection N={pm.n} p={pm.p} W={pm.w} metric={metric.tag} "
        f"seed={args.seed} [{state} in {elapsed:.2f}s]"
    )
    return 0


def _parse_list(text, allowed, flag):
    items = [t.strip() for t in text.split(",") if t.strip()]
    if text.strip() == "all":
        return list(allowed)
    for item in items:
        if item not in allowed:
            raise ConfigError(f"{flag}: unknown value {item!r} (allowed: {', '.join(allowed)})")
    if not items:
        raise ConfigError(f"{flag}: empty list")
    return items


_LS_CAPABLE = ("kmeans", "spectral", "dbscan")


def _benchmark_cells(ds, pipelines, algorithms, args, pivots, cache_dir):
    from .autoencoder import CnnGruConfig, DenseDaeConfig

    cells = {}
    for pipeline in pipelines:
        for algo_cli in algorithms:
            algorithm = algo_cli.replace("-", "_")
            if pipeline != "os" and algorithm not in _LS_CAPABLE:
                continue  # DTW/k-shape variants only make sense on raw series
            cnn = CnnGruConfig(seed=args.seed, epochs=args.epochs) if pipeline == "prls" else None
            dae = DenseDaeConfig(seed=args.seed, epochs=args.epochs) if pipeline == "ls" else None
            cfg = PipelineConfig(
                pipeline=pipeline,
                algorithm=algorithm,
                metric=_metric_from_args(args),
                p=pivots,
                k=args.k,
                seed=args.seed,
                cnn_gru=cnn,
                dense_dae=dae,
                cache_dir=cache_dir,
            )
            cells[(pipeline, algorithm)] = benchmark(ds, cfg, runs=args.runs)
    return cells


def cmd_benchmark(args) -> int:
    ds = _load_dataset(args.data, args.format, args.seed)
    if not ds.has_labels:
        raise ConfigError("benchmarks need a labeled dataset")
    pipelines = _parse_list(args.pipeline, _PIPELINES, "--pipeline")
    algorithms = _parse_list(args.algorithm, _CLI_ALGORITHMS, "--algorithm")

    base = {
        "data": str(args.data), "pipelines": pipelines, "algorithms": algorithms,
        "metric": args.metric, "pivots": args.pivots, "k": args.k,
        "runs": args.runs, "seed": args.seed, "epochs": args.epochs,
        "sweep_pivots": args.sweep_pivots,
    }
    run_dir = Path(args.out) / _config_hash(base)
    run_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = str(Path(args.out) / "cache")  # shared across configs and sweeps

    if args.sweep_pivots:
        sweep = [int(x) for x in args.sweep_pivots.split(",") if x.strip()]
        if not sweep or any(p < 1 for p in sweep):
            raise ConfigError("--sweep-pivots needs positive integers")
        rows = ["pivots,pipeline,algorithm,mean_accuracy,std_accuracy"]
        for p in sweep:
            cells = _benchmark_cells(ds, pipelines, algorithms, args, p, cache_dir)
            for (pipeline, algorithm) in sorted(cells):
                res = cells[(pipeline, algorithm)]
                rows.append(
                    f"{p},{pipeline},{algorithm},{res.mean:.4f},{res.std:.4f}"
                )
            write_benchmark_json(cells, run_dir / f"report_p{p}.json")
            write_timing_json(cells, run_dir / f"timing_p{p}.json")
        (run_dir / "pivot_sweep.csv").write_text("\n".join(rows) + "\n")
        print(f"pivot sweep written to {run_dir}")
        return 0

    cells = _benchmark_cells(ds, pipelines, algorithms, args, args.pivots, cache_dir)
    write_benchmark_json(cells, run_dir / "report.json")
    write_timing_json(cells, run_dir / "timing.json")
    write_table_csv(cells, run_dir / "table.csv")
    for (pipeline, algorithm), res in sorted(cells.items()):
        for report in res.reports:
            if report.loss_history:
                write_loss_history(
                    report.loss_history,
                    run_dir / f"loss_{pipeline}_{algorithm}_seed{report.seed}.csv",
                )
        print(f"{pipeline:5s} {algorithm:10s} mean={res.mean:.4f} std={res.std:.4f}")
    print(f"reports written to {run_dir}")
    return 0


def pca_2d(points: np.ndarray) -> np.ndarray:
    """Project points onto the top-2 principal axes via the Jacobi eigensolver.

    Eigenvector signs are fixed (largest-magnitude entry positive) so the
    layout is deterministic.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ConfigError("PCA plotting needs at least 2 latent dimensions")
    centered = x - x.mean(axis=0)
    cov = (centered.T @ centered) / max(x.shape[0], 1)
    _, vectors = jacobi_eigen(cov)
    basis = vectors[:, :2]
    for j in range(2):
        lead = np.abs(basis[:, j]).argmax()
        if basis[lead, j] < 0:
            basis[:, j] = -basis[:, j]
    return centered @ basis


def render_scatter_svg(points_2d, labels=None, width=640, height=480) -> str:
    """Deterministic SVG scatter, one palette color per label."""
    pts = np.asarray(points_2d, dtype=np.float64)
    labels = None if labels is None else np.asarray(labels, dtype=np.int64)
    margin = 40.0
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    sx = (pts[:, 0] - lo[0]) / span[0] * (width - 2 * margin) + margin
    sy = height - ((pts[:, 1] - lo[1]) / span[1] * (height - 2 * margin) + margin)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white" stroke="#cccccc"/>',
    ]
    for i in range(pts.shape[0]):
        color = _PALETTE[int(labels[i]) % len(_PALETTE)] if labels is not None else _PALETTE[0]
        parts.append(
            f'<circle cx="{sx[i]:.2f}" cy="{sy[i]:.2f}" r="3" fill="{color}" '
            f'fill-opacity="0.75"/>'
        )
    if labels is not None:
        for li, lab in enumerate(np.unique(labels)):
            color = _PALETTE[int(lab) % len(_PALETTE)]
            y = 20 + 16 * li
            parts.append(f'<rect x="{width - 90}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
            parts.append(
                f'<text x="{width - 74}" y="{y}" font-size="12" font-family="sans-serif">'
                f'cluster {int(lab)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def _read_matrix(path) -> np.ndarray:
    p = Path(path)
    if p.suffix == ".npy":
        return np.load(p)
    return np.loadtxt(p, delimiter=",", ndmin=2)


def cmd_plot(args) -> int:
    labels = None
    if args.latent:
        latents = _read_matrix(args.latent)
    elif args.checkpoint and args.data:
        model = load_model(args.checkpoint)
        ds = _load_dataset(args.data, args.format, args.seed)
        if model.architecture == "dense_dae":
            latents = encode(model, ds.znormalized().to_matrix())
        else:
            raise ConfigError(
                "plotting from a CNN-GRU checkpoint needs the projection the model "
                "was trained on; pass its latent matrix via --latent"
            )
        if ds.has_labels:
            labels = ds.labels
    else:
        raise ConfigError("plot needs --latent, or --checkpoint with --data")
    if args.labels:
        labels = np.loadtxt(args.labels, delimiter=",", dtype=np.int64).ravel()
    if latents.ndim != 2 or latents.shape[1] < 2:
        raise ConfigError("latent matrix must be 2-D with >= 2 columns")
    coords = latents if latents.shape[1] == 2 else pca_2d(latents)
    svg = render_scatter_svg(coords, labels)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg + "\n")
    print(f"scatter written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempoproj",
        description="Time-series clustering on pivot-distance projections",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--data", required=True, help="dataset path (file, dir or generator JSON)")
        p.add_argument("--format", default="auto",
                       choices=("auto", "ucr", "multivariate", "synth"))
        p.add_argument("--seed", type=int, default=0)

    p_info = sub.add_parser("info", help="inspect a dataset")
    add_common(p_info)
    p_info.set_defaults(func=cmd_info)

    p_proj = sub.add_parser("project", help="compute or reuse a projection cache")
    add_common(p_proj)
    p_proj.add_argument("--metric", default="sbd", choices=_METRICS)
    p_proj.add_argument("--pivots", type=int, default=16)
    p_proj.add_argument("--dtw-band", type=int, default=None)
    p_proj.add_argument("--out", default="runs")
    p_proj.set_defaults(func=cmd_project)

    p_bench = sub.add_parser("benchmark", help="run pipeline x algorithm cells")
    add_common(p_bench)
    p_bench.add_argument("--pipeline", default="all",
                         help="comma list of os,ls,pr,prls (or 'all')")
    p_bench.add_argument("--algorithm", default="kmeans,spectral,dbscan",
                         help="comma list of kmeans,kmeans-dtw,kshape,spectral,dbscan")
    p_bench.add_argument("--metric", default="sbd", choices=_METRICS)
    p_bench.add_argument("--pivots", type=int, default=16)
    p_bench.add_argument("--dtw-band", type=int, default=None)
    p_bench.add_argument("--k", type=int, default=None)
    p_bench.add_argument("--runs", type=int, default=10)
    p_bench.add_argument("--epochs", type=int, default=200)
    p_bench.add_argument("--sweep-pivots", default=None,
                         help="comma list of pivot counts, e.g. 4,8,16,32")
    p_bench.add_argument("--out", default="runs")
    p_bench.set_defaults(func=cmd_benchmark)

    p_plot = sub.add_parser("plot", help="PCA scatter of a latent matrix as SVG")
    p_plot.add_argument("--latent", default=None, help="CSV or .npy latent matrix")
    p_plot.add_argument("--labels", default=None, help="CSV of integer labels")
    p_plot.add_argument("--checkpoint", default=None, help="model checkpoint")
    p_plot.add_argument("--data", default=None)
    p_plot.add_argument("--format", default="auto",
                        choices=("auto", "ucr", "multivariate", "synth"))
    p_plot.add_argument("--seed", type=int, default=0)
    p_plot.add_argument("--out", default="latent.svg")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TempoprojError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
