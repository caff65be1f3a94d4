#!/usr/bin/env python3
"""Run the full four-pipeline comparison on a UCR archive file.

Usage: python demos/06_ucr_benchmark.py path/to/Plane.tsv [runs]

UCR flat files carry one sample per line, class label first.  Train/test
splits of the same dataset can be concatenated into one file beforehand; the
loader remaps labels to dense 0-based ids either way.  With the full-scale
defaults (200 epochs, 10 runs) a Plane-sized dataset takes tens of minutes;
pass a smaller run count for a quick look, or use the CLI for the cached,
report-writing variant:

    tempoproj benchmark --data Plane.tsv --pipeline os,pr,prls \
        --algorithm kmeans --runs 10 --out runs/
"""

import sys
import time

from tempoproj import PipelineConfig, benchmark, load_ucr
from tempoproj.evaluation import improvement_rows

if len(sys.argv) < 2:
    print(__doc__)
    raise SystemExit(0)

ds = load_ucr(sys.argv[1])
runs = int(sys.argv[2]) if len(sys.argv) > 2 else 10
print(f"{ds.name}: N={ds.n}, T={ds.equal_length}, k={ds.k_hint}")

cells = {}
for pipeline in ("os", "pr", "prls"):
    t0 = time.perf_counter()
    cfg = PipelineConfig(pipeline=pipeline, algorithm="kmeans", p=16, seed=0)
    cells[(pipeline, "kmeans")] = res = benchmark(ds, cfg, runs=runs)
    print(f"{pipeline:5s} kmeans: mean={res.mean:.3f} std={res.std:.3f} "
          f"({time.perf_counter() - t0:.0f}s)")

for row in improvement_rows(cells):
    print(f"improvement {row['pipeline']} over baseline: {row['improvement']:+.3f}")
