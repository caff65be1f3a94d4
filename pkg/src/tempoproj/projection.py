"""Pivot-distance projections: re-represent each sample by its distances to p pivots.

The projected dataset is an N x p x W tensor (W = number of variables).
Because every entry is a distance, the projection is invariant to any
transform of the input space that preserves the chosen metric (for the
Euclidean metric: translations and rotations of the whole space; uniform
scaling too once blocks are normalized to unit norm).

Projections can be cached on disk, keyed by dataset content, metric, pivot
count and seed.  Cache file layout (little-endian): magic ``TPRJ``, u32
version, u32 N/p/W, u8 metric tag, i32 dtw band (-1 when unset), i64 seed,
u8 znormalized flag, then p u32 pivot indices and N*p*W float64 values in
row-major order.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, znormalize
from .errors import FormatError, ParameterError, ShapeError
from .metrics import MetricKind, _sbd_block, sample_distance

_MAGIC = b"TPRJ"
_VERSION = 1
_TAG_CODES = {"euclidean": 0, "dtw": 1, "sbd": 2}
_TAG_NAMES = {v: k for k, v in _TAG_CODES.items()}
_HEADER = struct.Struct("<4sIIIIBiqB")


@dataclass(frozen=True)
class PivotSet:
    """Distinct sample indices chosen as pivots, plus the seed that drew them."""

    indices: tuple
    seed: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ParameterError("pivot indices must be distinct")
        if any(i < 0 for i in idx):
            raise ParameterError("pivot indices must be non-negative")
        object.__setattr__(self, "indices", idx)

    @property
    def p(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class ProjectionMatrix:
    """N x p x W tensor of sample-to-pivot distances."""

    values: np.ndarray
    metric: MetricKind
    pivot_set: PivotSet

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ShapeError(f"expected an N x p x W tensor, got ndim={values.ndim}")
        if values.shape[1] != self.pivot_set.p:
            raise ShapeError(
                f"tensor has {values.shape[1]} pivot columns for {self.pivot_set.p} pivots"
            )
        if not np.isfinite(values).all():
            raise FormatError("projection contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def w(self) -> int:
        return self.values.shape[2]

    def flattened(self) -> np.ndarray:
        """N x (p*W) view for Euclidean-space clustering algorithms."""
        return self.values.reshape(self.n, -1)


def select_pivots(ds: Dataset, p: int, seed: int) -> PivotSet:
    """Draw p distinct sample indices uniformly without replacement."""
    if not 1 <= p <= ds.n:
        raise ParameterError(f"pivot count must be in [1, {ds.n}], got {p}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(ds.n, size=p, replace=False)
    return PivotSet(tuple(int(i) for i in idx), seed=seed)


def gen_proj_space(
    ds: Dataset,
    pivots: PivotSet,
    metric: MetricKind,
    znormalize_first: bool | None = None,
) -> ProjectionMatrix:
    """Compute the full N x p x W projection tensor.

    ``znormalize_first`` defaults to True for SBD (which assumes z-normalized
    inputs) and False otherwise.  Cells where the sample *is* the pivot are
    written as exact zeros.
    """
    if any(i >= ds.n for i in pivots.indices):
        raise ParameterError("pivot index out of range for this dataset")
    znorm = (metric.tag == "sbd") if znormalize_first is None else znormalize_first
    samples = [znormalize(ts) for ts in ds.samples] if znorm else list(ds.samples)
    pivot_samples = [samples[i] for i in pivots.indices]

    n, p, w = ds.n, pivots.p, ds.v
    values = np.empty((n, p, w), dtype=np.float64)

    # fast path: SBD with one shared length lets the FFT be batched per sample
    batched_sbd = metric.tag == "sbd" and ds.equal_length is not None
    if batched_sbd:
        blocks = [
            np.stack([ts.values[j] for ts in pivot_samples]) for j in range(w)
        ]
    for i, sample in enumerate(samples):
        if batched_sbd:
            for j in range(w):
                values[i, :, j] = _sbd_block(sample.values[j], blocks[j])
        else:
            for c, pivot in enumerate(pivot_samples):
                try:
                    values[i, c, :] = sample_distance(sample, pivot, metric)
                except ShapeError as exc:
                    raise ShapeError(
                        f"sample {sample.id} vs pivot {pivots.indices[c]}: {exc}"
                    ) from None
        for c, pi in enumerate(pivots.indices):
            if pi == i:
                values[i, c, :] = 0.0
    return ProjectionMatrix(values, metric=metric, pivot_set=pivots)


def normalize_projection(pm: ProjectionMatrix) -> ProjectionMatrix:
    """Scale each sample's p x W block to unit Euclidean norm (zeros stay zeros).

    The result no longer stores raw distances, so the per-cell identity with
    ``sample_distance`` holds only up to the per-sample scale factor.
    """
    flat = pm.values.reshape(pm.n, -1)
    norms = np.sqrt(np.einsum("ij,ij->i", flat, flat))
    scale = np.where(norms > 0.0, norms, 1.0)
    return ProjectionMatrix(
        pm.values / scale[:, None, None], metric=pm.metric, pivot_set=pm.pivot_set
    )


def dataset_fingerprint(ds: Dataset) -> str:
    """Content hash of sample values and labels (order-sensitive)."""
    h = hashlib.sha256()
    for ts in ds.samples:
        h.update(np.asarray(ts.values.shape, dtype=np.int64).tobytes())
        h.update(ts.values.tobytes())
    if ds.labels is not None:
        h.update(ds.labels.tobytes())
    return h.hexdigest()


def projection_cache_key(
    ds: Dataset, metric: MetricKind, p: int, seed: int, znormalize_first: bool | None = None
) -> str:
    znorm = (metric.tag == "sbd") if znormalize_first is None else znormalize_first
    text = f"{dataset_fingerprint(ds)}|{metric.tag}|{metric.dtw_band}|{p}|{seed}|{znorm}"
    return hashlib.sha256(text.encode()).hexdigest()[:24]


def save_projection(pm: ProjectionMatrix, path, znormalized: bool = False) -> None:
    n, p, w = pm.values.shape
    band = -1 if pm.metric.dtw_band is None else int(pm.metric.dtw_band)
    header = _HEADER.pack(
        _MAGIC, _VERSION, n, p, w,
        _TAG_CODES[pm.metric.tag], band, pm.pivot_set.seed, int(znormalized),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(pm.pivot_set.indices, dtype="<u4").tobytes())
        fh.write(np.ascontiguousarray(pm.values, dtype="<f8").tobytes())


def load_projection(path) -> ProjectionMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:4] != _MAGIC:
        raise FormatError(f"{path}: not a projection cache file")
    magic, version, n, p, w, tag, band, seed, _znorm = _HEADER.unpack_from(raw)
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported cache version {version}")
    off = _HEADER.size
    idx = np.frombuffer(raw, dtype="<u4", count=p, offset=off)
    off += 4 * p
    values = np.frombuffer(raw, dtype="<f8", count=n * p * w, offset=off)
    if values.size != n * p * w:
        raise FormatError(f"{path}: truncated projection cache")
    metric = MetricKind(_TAG_NAMES[tag], dtw_band=None if band < 0 else band)
    return ProjectionMatrix(
        values.reshape(n, p, w).copy(),
        metric=metric,
        pivot_set=PivotSet(tuple(int(i) for i in idx), seed=seed),
    )


def cached_gen_proj_space(
    ds: Dataset,
    p: int,
    seed: int,
    metric: MetricKind,
    cache_dir,
    znormalize_first: bool | None = None,
):
    """Projection with a disk cache; returns (matrix, cache_hit)."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = projection_cache_key(ds, metric, p, seed, znormalize_first)
    path = cache_dir / f"proj_{key}.tpj"
    if path.exists():
        return load_projection(path), True
    pivots = select_pivots(ds, p, seed)
    pm = gen_proj_space(ds, pivots, metric, znormalize_first)
    znorm = (metric.tag == "sbd") if znormalize_first is None else znormalize_first
    save_projection(pm, path, znormalized=znorm)
    return pm, False
