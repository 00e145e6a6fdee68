"""K-means (k-means++ seeding) and K-median (Weiszfeld) center finding.

Both run several seeded restarts and keep the lowest loss; ties go to the
lowest restart index, so results do not depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CLUSTERING_METHODS = ("kmeans", "kmedian")


@dataclass(frozen=True)
class ClusterCenters:
    centers: np.ndarray  # K x dim
    inertia: float
    method: str
    labels: np.ndarray
    restart: int = 0


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _restart_rngs(seed: int, restarts: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(restarts)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _seed_centers(X: np.ndarray, K: int, rng: np.random.Generator, power: float) -> np.ndarray:
    """Careful seeding: next center drawn with probability ~ dist**power."""
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    closest = _sq_dists(X, X[idx[0]][None, :])[:, 0]
    for _ in range(1, K):
        w = closest if power == 2 else np.sqrt(closest)
        total = w.sum()
        if total <= 0:
            # fewer distinct points than K: take the first unused index
            remaining = np.setdiff1d(np.arange(n), idx)
            j = int(remaining[0])
        else:
            j = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
            j = min(j, n - 1)
        idx.append(j)
        closest = np.minimum(closest, _sq_dists(X, X[j][None, :])[:, 0])
    return X[idx].copy()


def _reseed_empty(X, C, labels, d2, k):
    # farthest point from its own center; argmax breaks ties by lowest index
    far = int(np.argmax(d2[np.arange(X.shape[0]), labels]))
    C[k] = X[far]
    labels[far] = k
    d2[far] = _sq_dists(X[far][None, :], C)[0]
    return far


def _lloyd(X, C, max_iter, tol):
    prev = np.inf
    for _ in range(max_iter):
        d2 = _sq_dists(X, C)
        labels = np.argmin(d2, axis=1)
        for k in range(C.shape[0]):
            if not np.any(labels == k):
                _reseed_empty(X, C, labels, d2, k)
        for k in range(C.shape[0]):
            C[k] = X[labels == k].mean(axis=0)
        loss = float(_sq_dists(X, C)[np.arange(X.shape[0]), labels].sum())
        if prev - loss <= tol:
            break
        prev = loss
    d2 = _sq_dists(X, C)
    labels = np.argmin(d2, axis=1)
    return C, labels, float(d2[np.arange(X.shape[0]), labels].sum())


def geometric_median(points: np.ndarray, start: np.ndarray | None = None,
                     max_iter: int = 200, tol: float = 1e-10) -> np.ndarray:
    """Weiszfeld iteration; points coinciding with the iterate are skipped."""
    points = np.asarray(points, dtype=np.float64)
    y = points.mean(axis=0) if start is None else np.array(start, dtype=np.float64)
    for _ in range(max_iter):
        dist = np.linalg.norm(points - y, axis=1)
        keep = dist > 1e-12
        if not np.any(keep):
            return y
        w = 1.0 / dist[keep]
        y_new = (points[keep] * w[:, None]).sum(axis=0) / w.sum()
        if np.linalg.norm(y_new - y) <= tol * max(1.0, np.linalg.norm(y)):
            return y_new
        y = y_new
    return y


def _kmedian_loop(X, C, max_iter, tol):
    n = X.shape[0]
    prev = np.inf
    for _ in range(max_iter):
        d2 = _sq_dists(X, C)
        labels = np.argmin(d2, axis=1)
        for k in range(C.shape[0]):
            if not np.any(labels == k):
                _reseed_empty(X, C, labels, d2, k)
        for k in range(C.shape[0]):
            C[k] = geometric_median(X[labels == k], start=C[k])
        loss = float(np.sqrt(_sq_dists(X, C)[np.arange(n), labels]).sum() / n)
        if prev - loss <= tol:
            break
        prev = loss
    d2 = _sq_dists(X, C)
    labels = np.argmin(d2, axis=1)
    return C, labels, float(np.sqrt(d2[np.arange(n), labels]).sum() / n)


def _best_of(X, K, restarts, seed, run, power, method):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if K < 1 or n < K:
        raise ValueError(f"need 1 <= K <= n, got K={K}, n={n}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for r, rng in enumerate(_restart_rngs(seed, restarts)):
        C, labels, loss = run(X, _seed_centers(X, K, rng, power))
        if best is None or loss < best.inertia:
            best = ClusterCenters(centers=C, inertia=loss, method=method, labels=labels, restart=r)
    return best


def kmeans_pp(points, K: int, restarts: int = 10, max_iter: int = 100,
              tol: float = 1e-6, seed: int = 0) -> ClusterCenters:
    """Best-of-``restarts`` Lloyd K-means with k-means++ seeding.

    ``inertia`` is the sum of squared distances to the assigned centers.
    """
    return _best_of(points, K, restarts, seed,
                    lambda X, C: _lloyd(X, C, max_iter, tol), 2, "kmeans")


def kmedian(points, K: int, restarts: int = 10, max_iter: int = 100,
            tol: float = 1e-6, seed: int = 0) -> ClusterCenters:
    """Best-of-``restarts`` K-median minimizing the mean Euclidean distance
    to the nearest center; each center is updated to the geometric median
    of its cluster.
    """
    return _best_of(points, K, restarts, seed,
                    lambda X, C: _kmedian_loop(X, C, max_iter, tol), 1, "kmedian")


def find_centers(points, K: int, method: str = "kmeans", **kwargs) -> ClusterCenters:
    if method == "kmeans":
        return kmeans_pp(points, K, **kwargs)
    if method == "kmedian":
        return kmedian(points, K, **kwargs)
    raise ValueError(f"clustering method must be one of {CLUSTERING_METHODS}, got {method!r}")
