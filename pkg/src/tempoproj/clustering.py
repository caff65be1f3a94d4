"""Traditional clustering back-ends plus the symmetric eigensolver they share.

All algorithms are bit-deterministic given (input, seed, parameters):
initialization draws from a seeded generator, iteration orders are fixed and
ties break on the first index.  k-means applies to any point matrix (raw
series, flattened projections or latent codes); k-means+DTW and k-shape work
on datasets directly and only make sense in the original space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, znormalize
from .errors import (
    DegenerateInputError,
    NumericalError,
    ParameterError,
    ShapeError,
    UnsupportedInputError,
)
from .metrics import cross_correlate, dtw_path

_DBA_ITERATIONS = 10


@dataclass(frozen=True)
class Assignment:
    """Cluster ids per sample; -1 marks DBSCAN noise."""

    labels: np.ndarray
    k: int
    inertia_or_score: float | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ShapeError("labels must be a flat sequence")
        if labels.size and (labels.min() < -1 or labels.max() >= self.k):
            raise ShapeError(f"labels outside [-1, {self.k})")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)


class SymmetricMatrix:
    """Dense symmetric matrix held as the packed upper triangle."""

    def __init__(self, packed: np.ndarray, order: int):
        packed = np.asarray(packed, dtype=np.float64)
        if packed.shape != (order * (order + 1) // 2,):
            raise ShapeError(f"packed storage for order {order} needs "
                             f"{order * (order + 1) // 2} entries")
        if not np.isfinite(packed).all():
            raise ShapeError("symmetric matrix entries must be finite")
        self._packed = packed
        self._order = order

    @property
    def order(self) -> int:
        return self._order

    @classmethod
    def from_dense(cls, dense) -> "SymmetricMatrix":
        a = np.asarray(dense, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"expected a square matrix, got {a.shape}")
        scale = max(1.0, float(np.abs(a).max()) if a.size else 1.0)
        if np.abs(a - a.T).max(initial=0.0) > 1e-10 * scale:
            raise ShapeError("matrix is not symmetric")
        iu = np.triu_indices(a.shape[0])
        return cls(a[iu], a.shape[0])

    def to_dense(self) -> np.ndarray:
        n = self._order
        out = np.zeros((n, n))
        iu = np.triu_indices(n)
        out[iu] = self._packed
        out.T[iu] = self._packed
        return out


def jacobi_eigen(matrix, max_sweeps: int = 100, tol: float = 1e-10):
    """Classical cyclic Jacobi rotations for a symmetric matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues descending and the
    eigenvectors as orthonormal columns.  Convergence means the off-diagonal
    Frobenius norm drops below ``tol``; exceeding ``max_sweeps`` raises.
    """
    if isinstance(matrix, SymmetricMatrix):
        a = matrix.to_dense()
    else:
        a = SymmetricMatrix.from_dense(matrix).to_dense()
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v

    def off_norm(m):
        off = m.copy()
        np.fill_diagonal(off, 0.0)
        return np.sqrt(np.sum(off * off))

    for _ in range(max_sweeps):
        if off_norm(a) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < tol / (n * n):
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    if off_norm(a) >= tol:
        raise NumericalError(f"Jacobi sweep cap ({max_sweeps}) hit before convergence")

    values = a.diagonal().copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]


def _pairwise_sq_dists(x, y=None):
    y = x if y is None else y
    xx = np.einsum("ij,ij->i", x, x)
    yy = np.einsum("ij,ij->i", y, y)
    d = xx[:, None] + yy[None, :] - 2.0 * (x @ y.T)
    np.maximum(d, 0.0, out=d)
    return d


def _kmeanspp_init(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centers[0] = points[first]
    closest = _pairwise_sq_dists(points, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen center
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[c] = points[idx]
        closest = np.minimum(closest, _pairwise_sq_dists(points, centers[c:c + 1])[:, 0])
    return centers


def _lloyd(points, k, rng, max_iter):
    n = points.shape[0]
    centers = _kmeanspp_init(points, k, rng)
    labels = None
    for _ in range(max_iter):
        dists = _pairwise_sq_dists(points, centers)
        new_labels = dists.argmin(axis=1)
        closest = dists[np.arange(n), new_labels]
        for c in range(k):
            if not np.any(new_labels == c):
                far = int(closest.argmax())
                centers[c] = points[far]
                new_labels[far] = c
                closest[far] = 0.0
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
    dists = _pairwise_sq_dists(points, centers)
    labels = dists.argmin(axis=1)
    inertia = float(dists[np.arange(n), labels].sum())
    return labels, inertia


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300,
           n_init: int = 10) -> Assignment:
    """Best of ``n_init`` k-means++-seeded Lloyd restarts (lowest inertia).

    Each restart stops when the assignment stabilizes or ``max_iter`` is hit;
    an empty cluster is re-seeded from the point farthest from its current
    centroid.  All randomness comes from ``seed``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] < 1:
        raise ShapeError(f"expected an N x d matrix, got {points.shape}")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in [1, {n}], got {k}")
    if n_init < 1:
        raise ParameterError(f"n_init must be >= 1, got {n_init}")
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(n_init):
        labels, inertia = _lloyd(points, k, rng, max_iter)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return Assignment(best_labels, k=k, inertia_or_score=best_inertia)


def _dtw_matrix_to_centroids(ds, centroids, band):
    """Per-variable-averaged DTW from every sample to every centroid."""
    n, k = ds.n, len(centroids)
    out = np.empty((n, k))
    for i, ts in enumerate(ds.samples):
        for c, cen in enumerate(centroids):
            total = 0.0
            for var in range(ds.v):
                cost, _, _ = dtw_path(ts.values[var], cen[var], band)
                total += cost
            out[i, c] = total / ds.v
    return out


def _dba_update(members, centroid, band):
    """One DTW barycenter averaging pass: align members to the centroid and
    average the values mapped to each centroid position."""
    v, length = centroid.shape
    sums = np.zeros((v, length))
    counts = np.zeros((v, length))
    for member in members:
        for var in range(v):
            _, pi, pj = dtw_path(member[var], centroid[var], band)
            np.add.at(sums[var], pj, member[var][pi])
            np.add.at(counts[var], pj, 1.0)
    return np.where(counts > 0, sums / np.maximum(counts, 1.0), centroid)


def kmeans_dtw(ds: Dataset, k: int, seed: int = 0, max_iter: int = 50,
               band: int | None = None) -> Assignment:
    """k-means under (per-variable-averaged) DTW with DBA centroid updates.

    Centroids start from random members and each update runs a fixed number
    of barycenter-averaging passes.
    """
    if not 1 <= k <= ds.n:
        raise ParameterError(f"k must be in [1, {ds.n}], got {k}")
    rng = np.random.default_rng(seed)
    init = rng.choice(ds.n, size=k, replace=False)
    centroids = [ds.samples[i].values.copy() for i in init]
    labels = None
    for _ in range(max_iter):
        dists = _dtw_matrix_to_centroids(ds, centroids, band)
        new_labels = dists.argmin(axis=1)
        for c in range(k):
            if not np.any(new_labels == c):
                far = int(dists[np.arange(ds.n), new_labels].argmax())
                centroids[c] = ds.samples[far].values.copy()
                new_labels[far] = c
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = [ds.samples[i].values for i in np.flatnonzero(labels == c)]
            for _ in range(_DBA_ITERATIONS):
                updated = _dba_update(members, centroids[c], band)
                if np.allclose(updated, centroids[c]):
                    break
                centroids[c] = updated
    dists = _dtw_matrix_to_centroids(ds, centroids, band)
    labels = dists.argmin(axis=1)
    inertia = float(dists[np.arange(ds.n), labels].sum())
    return Assignment(labels, k=k, inertia_or_score=inertia)


def _sbd_and_shift(x, y):
    """(SBD, best lag) between equal-length sequences; lag shifts y onto x."""
    cc = cross_correlate(x, y)
    denom = np.sqrt(np.dot(x, x) * np.dot(y, y))
    idx = int(cc.values.argmax())
    return 1.0 - cc.values[idx] / denom, idx - (cc.m - 1)


def _shift(seq, lag):
    out = np.zeros_like(seq)
    if lag > 0:
        out[lag:] = seq[:-lag or None]
    elif lag < 0:
        out[:lag] = seq[-lag:]
    else:
        out[:] = seq
    return out


def _shape_extraction(members, centroid):
    """k-shape centroid: principal eigenvector of the alignment-corrected
    scatter matrix, oriented toward the members and z-normalized."""
    length = members.shape[1]
    if np.any(centroid):
        aligned = np.empty_like(members)
        for i, row in enumerate(members):
            if np.any(row):
                _, lag = _sbd_and_shift(centroid, row)
                aligned[i] = _shift(row, lag)
            else:
                aligned[i] = row
    else:
        aligned = members
    scatter = aligned.T @ aligned
    q = np.eye(length) - np.full((length, length), 1.0 / length)
    corrected = q @ scatter @ q
    _, vecs = jacobi_eigen(corrected)
    shape = vecs[:, 0]
    if aligned.sum(axis=0) @ shape < 0:
        shape = -shape
    std = shape.std()
    if std <= 1e-12:
        return np.zeros(length)
    return (shape - shape.mean()) / std


def kshape(ds: Dataset, k: int, seed: int = 0, max_iter: int = 100) -> Assignment:
    """k-shape refinement: assign by SBD, extract centroids by eigendecomposition.

    Univariate, equal-length datasets only; samples are z-normalized
    internally (the extraction assumes it).
    """
    if ds.v != 1:
        raise UnsupportedInputError("kshape handles univariate datasets only")
    length = ds.equal_length
    if length is None:
        raise ShapeError("kshape requires equal-length samples")
    if not 1 <= k <= ds.n:
        raise ParameterError(f"k must be in [1, {ds.n}], got {k}")
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1")
    x = np.stack([znormalize(ts).values[0] for ts in ds.samples])
    zero_energy = ~np.any(x, axis=1)
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, k, size=ds.n)
    centroids = np.zeros((k, length))
    for _ in range(max_iter):
        for c in range(k):
            members = x[labels == c]
            if members.size == 0:
                centroids[c] = x[int(rng.integers(ds.n))]
            else:
                centroids[c] = _shape_extraction(members, centroids[c])
        dists = np.empty((ds.n, k))
        for i in range(ds.n):
            for c in range(k):
                if not np.any(centroids[c]) or zero_energy[i]:
                    dists[i, c] = 2.0  # maximal dissimilarity for degenerate rows
                else:
                    dists[i, c], _ = _sbd_and_shift(centroids[c], x[i])
        new_labels = dists.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    score = float(dists[np.arange(ds.n), labels].sum())
    return Assignment(labels, k=k, inertia_or_score=score)


def spectral(points, k: int, seed: int = 0, n_neighbors: int = 7) -> Assignment:
    """Normalized spectral clustering (symmetric Laplacian, Gaussian affinity).

    The kernel width sigma is the median distance to the ``n_neighbors``-th
    nearest neighbour, a local-scale median heuristic; the global median
    pairwise distance over-smooths non-convex structure (concentric rings
    become inseparable).  The bottom-k Laplacian eigenvectors come from the
    shared Jacobi eigensolver, rows are normalized and k-means finishes the
    job.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ShapeError(f"expected an N x d matrix, got {points.shape}")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in [1, {n}], got {k}")
    dists = np.sqrt(_pairwise_sq_dists(points))
    if n > 1:
        kth = min(max(n_neighbors, 1), n - 1)
        sigma = float(np.median(np.sort(dists, axis=1)[:, kth]))
    else:
        sigma = 0.0
    if sigma <= 0.0:
        raise DegenerateInputError("all points identical; spectral affinity is degenerate")
    affinity = np.exp(-(dists ** 2) / (2.0 * sigma * sigma))
    np.fill_diagonal(affinity, 0.0)
    degree = affinity.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(degree, 1e-300))
    laplacian = np.eye(n) - inv_sqrt[:, None] * affinity * inv_sqrt[None, :]
    laplacian = 0.5 * (laplacian + laplacian.T)
    values, vectors = jacobi_eigen(laplacian)
    embedding = vectors[:, np.argsort(values, kind="stable")[:k]]
    norms = np.sqrt(np.einsum("ij,ij->i", embedding, embedding))
    embedding = embedding / np.where(norms > 0, norms, 1.0)[:, None]
    result = kmeans(embedding, k, seed=seed)
    return Assignment(result.labels, k=k, inertia_or_score=result.inertia_or_score)


def auto_eps(points, min_pts: int = 4) -> float:
    """Elbow of the sorted min_pts-th nearest-neighbour distance curve.

    The elbow (maximum-curvature point) is located as the point farthest
    from the chord joining the curve's endpoints.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 2:
        raise ParameterError("auto eps needs at least two points")
    dists = np.sqrt(_pairwise_sq_dists(points))
    kth = min(min_pts, n - 1)
    knn = np.sort(dists, axis=1)[:, kth]
    curve = np.sort(knn)
    x = np.arange(n, dtype=np.float64)
    dx, dy = x[-1] - x[0], curve[-1] - curve[0]
    norm = np.hypot(dx, dy)
    if norm == 0.0:
        return float(curve[0])
    perp = np.abs(dy * (x - x[0]) - dx * (curve - curve[0])) / norm
    return float(curve[int(perp.argmax())])


def dbscan(points, eps="auto", min_pts: int = 4) -> Assignment:
    """Density clustering; ``eps='auto'`` uses the k-distance elbow heuristic.

    Noise keeps label -1; clusters are numbered by discovery order over
    sample index, which makes the result deterministic.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ShapeError(f"expected an N x d matrix, got {points.shape}")
    if min_pts < 1:
        raise ParameterError(f"min_pts must be >= 1, got {min_pts}")
    n = points.shape[0]
    eps_value = auto_eps(points, min_pts) if isinstance(eps, str) else float(eps)
    if eps_value < 0:
        raise ParameterError(f"eps must be >= 0, got {eps_value}")
    dists = np.sqrt(_pairwise_sq_dists(points))
    neighbors = [np.flatnonzero(dists[i] <= eps_value) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbors])
    labels = np.full(n, -1, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cluster
        frontier = [i]
        while frontier:
            j = frontier.pop()
            if not core[j]:
                continue
            for nb in neighbors[j]:
                if labels[nb] == -1:
                    labels[nb] = cluster
                    frontier.append(nb)
        cluster += 1
    return Assignment(labels, k=cluster)


def assignments_to_csv(assignment: Assignment, path) -> None:
    """Serialize an assignment as ``sample_id,cluster`` rows."""
    with open(path, "w") as fh:
        fh.write("sample_id,cluster\n")
        for i, lab in enumerate(assignment.labels):
            fh.write(f"{i},{int(lab)}\n")
