"""Initial dictionary and representative sets from a K-means clustering of
the first N streamed samples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Dictionary, ModelConfig, RepresentativeSet


class EmptyClusterError(RuntimeError):
    pass


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray  # m x k
    n_iter: int
    converged: bool
    inertia_history: list = field(default_factory=list)


@dataclass
class InitResult:
    D0: np.ndarray
    rep_sets: list
    indicator: np.ndarray  # N x k, one 1 per row
    sizes: np.ndarray
    labels: np.ndarray
    dictionary: Dictionary


def _sq_dists(X, centers):
    # N x k squared distances, samples as columns
    return (
        np.sum(X * X, axis=0)[:, None]
        - 2.0 * X.T @ centers
        + np.sum(centers * centers, axis=0)[None, :]
    ).clip(min=0.0)


def kmeans_plus_plus(X, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding; returns m x k initial centers."""
    m, n = X.shape
    idx = [int(rng.integers(n))]
    d2 = np.sum((X - X[:, idx[0]][:, None]) ** 2, axis=0)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[:, nxt][:, None]) ** 2, axis=0))
    return X[:, idx].copy()


def _repair_empty(X, labels, centers, k):
    """Give each empty cluster the point farthest from its current centre."""
    for _ in range(k):
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return labels
        c = empty[0]
        dist = np.sum((X - centers[:, labels]) ** 2, axis=0)
        dist[counts[labels] <= 1] = -1.0
        p = int(np.argmax(dist))
        if dist[p] < 0:
            break
        labels[p] = c
        centers[:, c] = X[:, p]
    if np.any(np.bincount(labels, minlength=k) == 0):
        raise EmptyClusterError("could not fill every cluster; try a larger N or smaller k")
    return labels


def _inertia(X, labels, centers):
    return float(np.sum((X - centers[:, labels]) ** 2))


def lloyd(X, k: int, rng: np.random.Generator, max_iter: int = 100) -> KMeansResult:
    """Lloyd iterations from k-means++ seeds, with empty-cluster repair."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    if n < k:
        raise ValueError(f"K-means needs at least k={k} samples, got {n}")
    centers = kmeans_plus_plus(X, k, rng)
    labels = None
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = np.argmin(_sq_dists(X, centers), axis=1)
        new = _repair_empty(X, new, centers, k)
        if labels is not None and np.array_equal(new, labels):
            converged = True
            break
        labels = new
        for c in range(k):
            centers[:, c] = X[:, labels == c].mean(axis=1)
        history.append(_inertia(X, labels, centers))
    return KMeansResult(labels, centers, it, converged, history)


def best_of_lloyd(X, k: int, rng: np.random.Generator, max_iter: int = 100, n_init: int = 10) -> KMeansResult:
    """Run ``n_init`` seeded restarts and keep the lowest final inertia (first wins ties)."""
    best = None
    for _ in range(n_init):
        res = lloyd(X, k, rng, max_iter)
        if best is None or res.inertia_history[-1] < best.inertia_history[-1]:
            best = res
    return best


def kmeans(X, k: int, seed=0, max_iter: int = 100, n_init: int = 10) -> np.ndarray:
    """Cluster the columns of ``X``; returns an n-vector of labels in [0, k)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return best_of_lloyd(X, k, rng, max_iter, n_init).labels


def initialize(X, config: ModelConfig, rng: Optional[np.random.Generator] = None) -> InitResult:
    """Cluster the buffered samples and build D0 from the cluster means.

    Each representative set holds its cluster's samples (in arrival order)
    and the initial weights are uniform, so D0 column i is exactly the mean
    of representative set i.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be an m x N matrix")
    m, n = X.shape
    if n != config.init_sample_count:
        raise ValueError(f"expected {config.init_sample_count} initial samples, got {n}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    k = config.k
    labels = best_of_lloyd(X, k, rng).labels
    H = np.zeros((n, k))
    H[np.arange(n), labels] = 1.0
    sizes = H.sum(axis=0).astype(int)
    if np.any(sizes == 0):
        raise EmptyClusterError("empty cluster after repair")
    rep_sets = [RepresentativeSet(X[:, labels == i]) for i in range(k)]
    weights = [np.full(s, 1.0 / s) for s in sizes]
    dic = Dictionary.from_weights(rep_sets, weights)
    return InitResult(dic.columns.copy(), rep_sets, H, sizes, labels, dic)
