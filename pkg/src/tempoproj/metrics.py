"""Time-series distance and similarity measures: Euclidean, DTW and SBD.

SBD (shape-based distance) is ``1 - max_w NCC_w`` where ``NCC`` is the
cross-correlation sequence divided by the geometric mean of the two zero-lag
autocorrelations; it ranges over [0, 2] with 0 meaning perfect similarity.
Cross-correlation runs on an iterative radix-2 FFT with zero-padding to the
next power of two >= 2m-1, which keeps it O(m log m).

DTW uses squared local cost (a-b)^2 with steps {(1,0),(0,1),(1,1)} and an
optional Sakoe-Chiba band; the DP kernels are numba-compiled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .dataset import TimeSeries
from .errors import ConfigError, DegenerateInputError, ParameterError, ShapeError

_METRIC_TAGS = ("euclidean", "dtw", "sbd")


@dataclass(frozen=True)
class MetricKind:
    """A metric selector; ``dtw_band`` is a Sakoe-Chiba window radius."""

    tag: str
    dtw_band: int | None = None

    def __post_init__(self):
        if self.tag not in _METRIC_TAGS:
            raise ConfigError(f"unknown metric {self.tag!r}")
        if self.dtw_band is not None:
            if self.tag != "dtw":
                raise ConfigError("dtw_band is only meaningful for tag='dtw'")
            if self.dtw_band < 0:
                raise ParameterError(f"dtw_band must be >= 0, got {self.dtw_band}")


EUCLIDEAN = MetricKind("euclidean")
DTW = MetricKind("dtw")
SBD = MetricKind("sbd")


@dataclass(frozen=True)
class CrossCorrelationSequence:
    """All 2m-1 cross-correlation lags; index ``m - 1`` is the zero lag."""

    values: np.ndarray
    m: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (2 * self.m - 1,):
            raise ShapeError(
                f"cross-correlation of m={self.m} must have length {2 * self.m - 1}"
            )
        object.__setattr__(self, "values", values)

    @property
    def zero_lag(self) -> float:
        return float(self.values[self.m - 1])


def _as_1d(x, name):
    a = np.asarray(x, dtype=np.float64).ravel()
    if a.size == 0:
        raise ShapeError(f"{name}: empty sequence")
    return a


def euclidean(x, y) -> float:
    """Plain L2 distance between equal-length sequences."""
    a = _as_1d(x, "x")
    b = _as_1d(y, "y")
    if a.size != b.size:
        raise ShapeError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


@njit(cache=True)
def _dtw_cost(x, y, band):
    n = x.shape[0]
    m = y.shape[0]
    big = np.inf
    acc = np.full((n + 1, m + 1), big)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        lo = i - band
        if lo < 1:
            lo = 1
        hi = i + band
        if hi > m:
            hi = m
        for j in range(lo, hi + 1):
            d = x[i - 1] - y[j - 1]
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = d * d + best
    return acc[n, m]


@njit(cache=True)
def _dtw_path(x, y, band):
    """Accumulated-cost DP plus backtracked alignment (diagonal-first ties)."""
    n = x.shape[0]
    m = y.shape[0]
    big = np.inf
    acc = np.full((n + 1, m + 1), big)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        lo = i - band
        if lo < 1:
            lo = 1
        hi = i + band
        if hi > m:
            hi = m
        for j in range(lo, hi + 1):
            d = x[i - 1] - y[j - 1]
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = d * d + best
    path_i = np.empty(n + m, dtype=np.int64)
    path_j = np.empty(n + m, dtype=np.int64)
    i = n
    j = m
    k = 0
    while i > 0 or j > 0:
        path_i[k] = i - 1
        path_j[k] = j - 1
        k += 1
        if i == 1 and j == 1:
            break
        diag = acc[i - 1, j - 1] if i > 1 and j > 1 else big
        up = acc[i - 1, j] if i > 1 else big
        left = acc[i, j - 1] if j > 1 else big
        if diag <= up and diag <= left:
            i -= 1
            j -= 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
    return acc[n, m], path_i[:k][::-1].copy(), path_j[:k][::-1].copy()


def _check_band(band, n, m):
    if band is None:
        return max(n, m)
    if band < abs(n - m):
        raise ParameterError(
            f"band {band} is infeasible for lengths {n} and {m} (need >= {abs(n - m)})"
        )
    return int(band)


def dtw(x, y, band: int | None = None) -> float:
    """Dynamic time warping distance (accumulated squared local cost).

    ``band`` restricts the alignment to |i - j| <= band (Sakoe-Chiba); any
    band >= max(len(x), len(y)) reproduces the unbanded value exactly.
    """
    a = _as_1d(x, "x")
    b = _as_1d(y, "y")
    return float(_dtw_cost(a, b, _check_band(band, a.size, b.size)))


def dtw_path(x, y, band: int | None = None):
    """DTW cost plus one optimal alignment path as (cost, idx_x, idx_y)."""
    a = _as_1d(x, "x")
    b = _as_1d(y, "y")
    cost, pi, pj = _dtw_path(a, b, _check_band(band, a.size, b.size))
    return float(cost), pi, pj


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


def _fft_pow2(a, invert=False):
    """Iterative radix-2 Cooley-Tukey over the last axis (power-of-two length)."""
    a = np.array(a, dtype=np.complex128)
    n = a.shape[-1]
    if n <= 1:
        return a
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    a = a[..., rev]
    m = 2
    while m <= n:
        half = m // 2
        ang = (2j if invert else -2j) * np.pi / m
        w = np.exp(ang * np.arange(half))
        blocks = a.reshape(a.shape[:-1] + (n // m, m))
        u = blocks[..., :half].copy()
        v = blocks[..., half:] * w
        blocks[..., :half] = u + v
        blocks[..., half:] = u - v
        m *= 2
    if invert:
        a /= n
    return a


def _pad_to(a, n):
    if a.size == n:
        return a
    out = np.zeros(n, dtype=np.float64)
    out[: a.size] = a
    return out


def cross_correlate(x, y) -> CrossCorrelationSequence:
    """All-lag cross-correlation of two sequences via the radix-2 FFT.

    The shorter input is zero-padded to m = max(len(x), len(y)).  Entry
    ``k`` holds the lag ``k - (m - 1)`` value ``sum_t x[t + lag] * y[t]``,
    so the middle entry is the plain inner product.
    """
    a = _as_1d(x, "x")
    b = _as_1d(y, "y")
    m = max(a.size, b.size)
    a = _pad_to(a, m)
    b = _pad_to(b, m)
    if m == 1:
        return CrossCorrelationSequence(np.array([a[0] * b[0]]), m=1)
    size = _next_pow2(2 * m - 1)
    fa = _fft_pow2(_pad_to(a, size))
    fb = _fft_pow2(_pad_to(b, size))
    cc = _fft_pow2(fa * np.conj(fb), invert=True).real
    values = np.concatenate([cc[size - (m - 1):], cc[:m]])
    return CrossCorrelationSequence(values, m=m)


def sbd(x, y) -> float:
    """Shape-based distance: 1 minus the peak coefficient-normalized
    cross-correlation over all lags.  Zero-energy inputs are rejected."""
    a = _as_1d(x, "x")
    b = _as_1d(y, "y")
    r0x = float(np.dot(a, a))
    r0y = float(np.dot(b, b))
    if r0x == 0.0 or r0y == 0.0:
        raise DegenerateInputError("SBD is undefined for an all-zero sequence")
    cc = cross_correlate(a, b)
    return float(1.0 - cc.values.max() / np.sqrt(r0x * r0y))


def _sbd_block(x, block) -> np.ndarray:
    """SBD of one sequence against each row of an equal-length block.

    Shares one forward FFT of ``x`` across all rows; used by the projection
    builder where every pivot row has the same length.
    """
    m = x.size
    norms = np.einsum("ij,ij->i", block, block)
    r0x = float(np.dot(x, x))
    if r0x == 0.0 or np.any(norms == 0.0):
        raise DegenerateInputError("SBD is undefined for an all-zero sequence")
    if m == 1:
        peak = x[0] * block[:, 0]
    else:
        size = _next_pow2(2 * m - 1)
        fx = _fft_pow2(_pad_to(x, size))
        padded = np.zeros((block.shape[0], size))
        padded[:, :m] = block
        fb = _fft_pow2(padded)
        cc = _fft_pow2(fx * np.conj(fb), invert=True).real
        lags = np.concatenate([cc[:, size - (m - 1):], cc[:, :m]], axis=1)
        peak = lags.max(axis=1)
    return 1.0 - peak / np.sqrt(r0x * norms)


def sample_distance(a: TimeSeries, b: TimeSeries, kind: MetricKind) -> np.ndarray:
    """Per-variable distance vector between two samples (length W = V)."""
    if a.v != b.v:
        raise ShapeError(f"variable count mismatch: {a.v} vs {b.v}")
    out = np.empty(a.v, dtype=np.float64)
    for j in range(a.v):
        if kind.tag == "euclidean":
            out[j] = euclidean(a.values[j], b.values[j])
        elif kind.tag == "dtw":
            out[j] = dtw(a.values[j], b.values[j], band=kind.dtw_band)
        else:
            out[j] = sbd(a.values[j], b.values[j])
    return out
