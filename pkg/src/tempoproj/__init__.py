"""Time-series clustering on pivot-distance projections.

Samples are re-represented by their distances (Euclidean, DTW or SBD) to a
handful of randomly drawn pivot samples; the projected tensors either feed a
traditional clustering algorithm directly or pass through a CNN-GRU
autoencoder whose latent codes are clustered instead.  A benchmark harness
compares the four pipelines (original space, dense-DAE latents, projections,
projection latents) under Hungarian-matching accuracy.
"""

from .dataset import (
    ClassSpec,
    Dataset,
    GeneratorSpec,
    TimeSeries,
    load_multivariate,
    load_ucr,
    save_multivariate,
    save_ucr,
    synth_generate,
    znormalize,
)
from .metrics import (
    DTW,
    EUCLIDEAN,
    SBD,
    CrossCorrelationSequence,
    MetricKind,
    cross_correlate,
    dtw,
    dtw_path,
    euclidean,
    sample_distance,
    sbd,
)
from .projection import (
    PivotSet,
    ProjectionMatrix,
    cached_gen_proj_space,
    dataset_fingerprint,
    gen_proj_space,
    load_projection,
    normalize_projection,
    save_projection,
    select_pivots,
)
from .tensor import AdamState, GruParams, Tensor, adam_step, gradcheck
from .autoencoder import (
    CnnGruConfig,
    DenseDaeConfig,
    ModelParams,
    build_cnn_gru,
    build_dense_dae,
    encode,
    load_model,
    reconstruct,
    save_model,
    train,
    write_loss_history,
)
from .clustering import (
    Assignment,
    SymmetricMatrix,
    assignments_to_csv,
    auto_eps,
    dbscan,
    jacobi_eigen,
    kmeans,
    kmeans_dtw,
    kshape,
    spectral,
)
from .evaluation import (
    BenchmarkResult,
    PipelineConfig,
    RunReport,
    benchmark,
    clustering_accuracy,
    hungarian,
    improvement,
    run_pipeline,
)

__version__ = "0.1.0"
