#!/usr/bin/env python3
"""Compare the four pipelines on the synthetic three-class benchmark.

OS clusters raw series, LS clusters dense-DAE latents, Pr clusters the
pivot-distance projections and Pr+LS clusters CNN-GRU latents of those
projections.  Shortened epochs keep the demo around a minute; the full-scale
settings live in the CLI defaults (`tempoproj benchmark ... --epochs 200`).
"""

import time

from tempoproj import (
    CnnGruConfig,
    DenseDaeConfig,
    PipelineConfig,
    benchmark,
    synth_generate,
)
from tempoproj.evaluation import improvement_rows

spec = {
    "classes": [
        {"waveform": "sine", "noise_std": 0.1, "phase_jitter": 0.3},
        {"waveform": "square", "noise_std": 0.1, "phase_jitter": 0.3},
        {"waveform": "trend", "noise_std": 0.1, "phase_jitter": 0.3},
    ],
    "n_per_class": 100,
    "length": 128,
}
ds = synth_generate(spec, seed=42)
runs = 5

cells = {}
configs = {
    ("os", "kmeans"): PipelineConfig(pipeline="os", algorithm="kmeans", seed=1),
    ("ls", "kmeans"): PipelineConfig(
        pipeline="ls", algorithm="kmeans", seed=1,
        dense_dae=DenseDaeConfig(seed=1, epochs=15, hidden_dims=(64, 64, 128)),
    ),
    ("pr", "kmeans"): PipelineConfig(pipeline="pr", algorithm="kmeans", p=16, seed=1),
    ("prls", "kmeans"): PipelineConfig(
        pipeline="prls", algorithm="kmeans", p=16, seed=1,
        cnn_gru=CnnGruConfig(seed=1, epochs=40),
    ),
}
for key, cfg in configs.items():
    t0 = time.perf_counter()
    cells[key] = benchmark(ds, cfg, runs=runs)
    print(f"{key[0]:5s} {key[1]:7s} mean={cells[key].mean:.3f} "
          f"std={cells[key].std:.3f}  ({time.perf_counter() - t0:.0f}s)")

for row in improvement_rows(cells):
    print(f"improvement {row['pipeline']:4s} over best OS/LS baseline: "
          f"{row['improvement']:+.3f}")
